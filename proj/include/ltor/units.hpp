#pragma once

#include <cmath>

namespace ltor {

inline constexpr double kStandardGravity = 9.80665;  // m/s^2
inline constexpr double kSecondsPerDay = 86400.0;

// Canonical unit system for the solver: length unit `du_km`, time unit such
// that mu = 1, mass unit equal to the initial spacecraft mass. Interfaces
// stay in km / s / kg; everything solver-facing is nondimensional.
struct UnitSystem {
  double du_km = 6378.137;
  double mu_km3s2 = 398600.4418;
  double mass_kg = 1000.0;
  double tu_s = 0.0;    // sqrt(du^3 / mu)
  double vu_kms = 0.0;  // du / tu

  static UnitSystem make(double du_km, double mu_km3s2, double mass_kg) {
    UnitSystem u;
    u.du_km = du_km;
    u.mu_km3s2 = mu_km3s2;
    u.mass_kg = mass_kg;
    u.tu_s = std::sqrt(du_km * du_km * du_km / mu_km3s2);
    u.vu_kms = du_km / u.tu_s;
    return u;
  }

  double length_to_canonical(double km) const { return km / du_km; }
  double length_from_canonical(double c) const { return c * du_km; }
  double time_to_canonical(double s) const { return s / tu_s; }
  double time_from_canonical(double c) const { return c * tu_s; }
  double days_to_canonical(double d) const { return d * kSecondsPerDay / tu_s; }
  double days_from_canonical(double c) const { return c * tu_s / kSecondsPerDay; }
  double velocity_to_canonical(double kms) const { return kms / vu_kms; }
  double velocity_from_canonical(double c) const { return c * vu_kms; }

  // Thrust in newtons acting on the canonical mass unit.
  double thrust_to_canonical(double newtons) const {
    const double accel_unit_ms2 = du_km * 1000.0 / (tu_s * tu_s);
    return newtons / (mass_kg * accel_unit_ms2);
  }

  // Exhaust velocity Isp * g0 (m/s) in canonical velocity units.
  double exhaust_velocity_to_canonical(double isp_s, double g0_ms2 = kStandardGravity) const {
    const double vu_ms = du_km * 1000.0 / tu_s;
    return isp_s * g0_ms2 / vu_ms;
  }
};

}  // namespace ltor
