#!/usr/bin/env python3
"""Regenerate include/ltor/detail/dop853_tables.hpp from scipy's DOP853
coefficient set (Hairer, Norsett & Wanner, Solving ODEs I, 2nd ed.).
Run once and commit the output; the build does not depend on this script."""
import numpy as np
from scipy.integrate._ivp import dop853_coefficients as d

def fmt(x):
    if x == 0.0:
        return "0.0"
    return repr(float(x))

def emit_1d(name, arr):
    vals = ", ".join(fmt(v) for v in arr)
    return f"inline constexpr std::array<double, {len(arr)}> {name} = {{{vals}}};\n"

def emit_2d(name, arr):
    rows = []
    for r in arr:
        rows.append("    {" + ", ".join(fmt(v) for v in r) + "}")
    body = ",\n".join(rows)
    return (f"inline constexpr std::array<std::array<double, {arr.shape[1]}>, {arr.shape[0]}> "
            f"{name} = {{{{\n{body}\n}}}};\n")

out = []
out.append("// Dormand-Prince 8(5,3) coefficient tables (Hairer's DOP853).")
out.append("// Generated by tools/gen_dop853_tables.py; do not edit by hand.")
out.append("#pragma once")
out.append("")
out.append("#include <array>")
out.append("")
out.append("namespace ltor::detail::dop853 {")
out.append("")
out.append(f"inline constexpr int n_stages = {d.N_STAGES};")
out.append(f"inline constexpr int n_stages_extended = {d.N_STAGES_EXTENDED};")
out.append(f"inline constexpr int interpolator_power = {d.INTERPOLATOR_POWER};")
out.append("")
out.append(emit_2d("a", d.A))
out.append(emit_1d("c", d.C))
out.append(emit_1d("b", d.B))
out.append(emit_1d("e3", d.E3))
out.append(emit_1d("e5", d.E5))
out.append(emit_2d("dense_d", d.D))
out.append("}  // namespace ltor::detail::dop853")
out.append("")
open("/root/proj/include/ltor/detail/dop853_tables.hpp", "w").write("\n".join(out))
print("wrote", sum(len(l) for l in out), "bytes")
