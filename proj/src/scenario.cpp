#include "ltor/scenario.hpp"

#include <stdexcept>

namespace ltor {

namespace {

void put_elements(KeyValueFile& kv, const std::string& prefix, const ClassicalElements& coe) {
  kv.set_double(prefix + ".a_km", coe.a);
  kv.set_double(prefix + ".e", coe.e);
  kv.set_double(prefix + ".i_deg", rad_to_deg(coe.inc));
  kv.set_double(prefix + ".raan_deg", rad_to_deg(coe.raan));
  kv.set_double(prefix + ".argp_deg", rad_to_deg(coe.argp));
  kv.set_double(prefix + ".ta_deg", rad_to_deg(coe.ta));
}

ClassicalElements get_elements(const KeyValueFile& kv, const std::string& prefix) {
  ClassicalElements coe;
  coe.a = kv.get_double(prefix + ".a_km");
  coe.e = kv.get_double(prefix + ".e");
  coe.inc = deg_to_rad(kv.get_double(prefix + ".i_deg"));
  coe.raan = deg_to_rad(kv.get_double(prefix + ".raan_deg"));
  coe.argp = deg_to_rad(kv.get_double(prefix + ".argp_deg"));
  coe.ta = deg_to_rad(kv.get_double(prefix + ".ta_deg"));
  return coe;
}

}  // namespace

KeyValueFile SpacecraftScenario::to_kv() const {
  KeyValueFile kv;
  kv.set("name", name);
  put_elements(kv, "departure", departure);
  put_elements(kv, "target", target);
  kv.set("target.l_mode", target_l_mode == BoundaryMode::l_free ? "free" : "fixed");
  kv.set_double("m0_kg", m0_kg);
  kv.set_double("tmax_n", tmax_n);
  kv.set_double("isp_s", isp_s);
  kv.set_double("g0_ms2", g0_ms2);
  kv.set_double("mu_km3s2", mu_km3s2);
  kv.set_double("du_km", du_km);
  kv.set_double("rtol", rtol);
  kv.set_double("atol", atol);
  return kv;
}

SpacecraftScenario SpacecraftScenario::from_kv(const KeyValueFile& kv) {
  SpacecraftScenario s;
  s.name = kv.get_or("name", "unnamed");
  s.departure = get_elements(kv, "departure");
  s.target = get_elements(kv, "target");
  const std::string mode = kv.get_or("target.l_mode", "free");
  if (mode == "free")
    s.target_l_mode = BoundaryMode::l_free;
  else if (mode == "fixed")
    s.target_l_mode = BoundaryMode::l_fixed;
  else
    throw std::runtime_error("scenario: target.l_mode must be 'free' or 'fixed'");
  s.m0_kg = kv.get_double("m0_kg");
  s.tmax_n = kv.get_double("tmax_n");
  s.isp_s = kv.get_double("isp_s");
  s.g0_ms2 = kv.get_double_or("g0_ms2", kStandardGravity);
  s.mu_km3s2 = kv.get_double_or("mu_km3s2", 398600.4418);
  s.du_km = kv.get_double_or("du_km", 6378.137);
  s.rtol = kv.get_double_or("rtol", 1e-10);
  s.atol = kv.get_double_or("atol", 1e-12);
  if (s.m0_kg <= 0.0 || s.tmax_n <= 0.0 || s.isp_s <= 0.0)
    throw std::runtime_error("scenario: m0, tmax and isp must be positive");
  return s;
}

SpacecraftScenario preset_scenario(const std::string& name) {
  SpacecraftScenario s;
  s.name = name;

  ClassicalElements leo;
  leo.a = 6671.0;
  leo.e = 0.0;
  leo.inc = deg_to_rad(5.0);
  leo.ta = deg_to_rad(180.0);  // transfers start at apogee

  ClassicalElements gto;
  const double rp = 6671.0, ra = 42164.0;
  gto.a = 0.5 * (rp + ra);
  gto.e = (ra - rp) / (ra + rp);
  gto.inc = deg_to_rad(5.0);
  gto.ta = deg_to_rad(180.0);

  ClassicalElements geo;
  geo.a = 42164.0;

  s.target = geo;
  s.target_l_mode = BoundaryMode::l_free;
  s.m0_kg = 1000.0;

  if (name == "leo_1n") {
    s.departure = leo;
    s.tmax_n = 1.0;
    s.isp_s = 2000.0;
  } else if (name == "leo_02n") {
    s.departure = leo;
    s.tmax_n = 0.2;
    s.isp_s = 2500.0;
  } else if (name == "gto_1n") {
    s.departure = gto;
    s.tmax_n = 1.0;
    s.isp_s = 2000.0;
    s.rtol = 1e-11;  // repeated perigee passes need a tighter local error
    s.atol = 1e-13;  // for the shooting residual to reach its tolerance
  } else if (name == "gto_02n") {
    s.departure = gto;
    s.tmax_n = 0.2;
    s.isp_s = 2500.0;
    s.rtol = 1e-11;
    s.atol = 1e-13;
  } else {
    throw std::runtime_error("unknown scenario preset: " + name +
                             " (expected leo_1n, leo_02n, gto_1n, gto_02n)");
  }
  return s;
}

}  // namespace ltor
