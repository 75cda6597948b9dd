#pragma once

#include <cmath>

#include "ltor/elements.hpp"

namespace ltor {

// Edelbaum-style velocity increment between near-circular orbits, used as a
// distance-to-target metric and as a coarse transfer-time seed. Deltas are
// target minus current; v0 is the circular speed at the current semi-major
// axis. Units follow mu and a (km, km^3/s^2 -> dv in km/s; the m/s view is
// dv_ms).
struct EdelbaumDistance {
  double dv_kms = 0.0;
  double dv_ms = 0.0;
  double da = 0.0;
  double de = 0.0;
  double di = 0.0;  // rad
  double a0 = 0.0;
  double v0_kms = 0.0;
};

// Classic circular-to-circular Edelbaum velocity increment with plane
// change, used to seed transfer-time guesses. Eccentric orbits enter through
// their semi-major axes.
inline double edelbaum_transfer_dv_kms(double a0_km, double a1_km, double di_rad, double mu) {
  const double v0 = std::sqrt(mu / a0_km);
  const double v1 = std::sqrt(mu / a1_km);
  return std::sqrt(v0 * v0 + v1 * v1 - 2.0 * v0 * v1 * std::cos(M_PI / 2.0 * std::abs(di_rad)));
}

inline EdelbaumDistance edelbaum_dv(const ClassicalElements& current, const ClassicalElements& target,
                                    double mu) {
  EdelbaumDistance d;
  d.a0 = current.a;
  d.v0_kms = std::sqrt(mu / current.a);
  d.da = target.a - current.a;
  d.de = target.e - current.e;
  d.di = target.inc - current.inc;
  const double in_plane = 0.5 * d.da / d.a0 + 0.649 * d.de;
  const double out_plane = 1.571 * d.di;
  d.dv_kms = d.v0_kms * std::sqrt(in_plane * in_plane + out_plane * out_plane);
  d.dv_ms = d.dv_kms * 1000.0;
  return d;
}

}  // namespace ltor
