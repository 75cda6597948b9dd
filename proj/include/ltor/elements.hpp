#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace ltor {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

inline double wrap_two_pi(double angle) {
  const double two_pi = 2.0 * M_PI;
  double a = std::fmod(angle, two_pi);
  if (a < 0.0) a += two_pi;
  return a;
}

inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

// Classical (Keplerian) elements. Angles in radians, lengths in the caller's
// length unit (km at the interfaces, canonical inside the solver).
struct ClassicalElements {
  double a = 0.0;     // semi-major axis
  double e = 0.0;     // eccentricity
  double inc = 0.0;   // inclination
  double raan = 0.0;  // right ascension of the ascending node
  double argp = 0.0;  // argument of perigee
  double ta = 0.0;    // true anomaly
};

// Modified equinoctial elements. L is kept unwrapped: it grows monotonically
// along a transfer and its total sweep counts revolutions.
struct MeeState {
  double p = 0.0;
  double ex = 0.0;
  double ey = 0.0;
  double hx = 0.0;
  double hy = 0.0;
  double L = 0.0;

  Vec6 vector() const {
    Vec6 v;
    v << p, ex, ey, hx, hy, L;
    return v;
  }
  static MeeState from_vector(const Vec6& v) {
    return MeeState{v[0], v[1], v[2], v[3], v[4], v[5]};
  }
};

struct CartesianState {
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

inline MeeState coe_to_mee(const ClassicalElements& coe) {
  if (coe.e >= 1.0) throw std::invalid_argument("coe_to_mee: only elliptic orbits (e < 1) supported");
  if (coe.a <= 0.0) throw std::invalid_argument("coe_to_mee: semi-major axis must be positive");
  MeeState mee;
  mee.p = coe.a * (1.0 - coe.e * coe.e);
  mee.ex = coe.e * std::cos(coe.argp + coe.raan);
  mee.ey = coe.e * std::sin(coe.argp + coe.raan);
  const double t = std::tan(coe.inc / 2.0);
  mee.hx = t * std::cos(coe.raan);
  mee.hy = t * std::sin(coe.raan);
  mee.L = coe.argp + coe.raan + coe.ta;
  return mee;
}

inline ClassicalElements mee_to_coe(const MeeState& mee) {
  ClassicalElements coe;
  coe.e = std::sqrt(mee.ex * mee.ex + mee.ey * mee.ey);
  coe.a = mee.p / (1.0 - coe.e * coe.e);
  const double h = std::sqrt(mee.hx * mee.hx + mee.hy * mee.hy);
  coe.inc = 2.0 * std::atan(h);
  coe.raan = (h > 0.0) ? std::atan2(mee.hy, mee.hx) : 0.0;
  const double lonper = (coe.e > 0.0) ? std::atan2(mee.ey, mee.ex) : 0.0;  // argp + raan
  coe.argp = lonper - coe.raan;
  coe.ta = mee.L - lonper;
  return coe;
}

// Position/velocity from MEE (standard equinoctial-frame expansion).
inline CartesianState mee_to_cartesian(const MeeState& mee, double mu) {
  if (mee.p <= 0.0) throw std::invalid_argument("mee_to_cartesian: p must be positive");
  const double cl = std::cos(mee.L);
  const double sl = std::sin(mee.L);
  const double alpha2 = mee.hx * mee.hx - mee.hy * mee.hy;
  const double s2 = 1.0 + mee.hx * mee.hx + mee.hy * mee.hy;
  const double w = 1.0 + mee.ex * cl + mee.ey * sl;
  const double r = mee.p / w;
  const double sqrt_mu_p = std::sqrt(mu / mee.p);
  const double hxhy2 = 2.0 * mee.hx * mee.hy;

  CartesianState s;
  s.r.x() = (r / s2) * (cl + alpha2 * cl + hxhy2 * sl);
  s.r.y() = (r / s2) * (sl - alpha2 * sl + hxhy2 * cl);
  s.r.z() = (2.0 * r / s2) * (mee.hx * sl - mee.hy * cl);
  s.v.x() = -(sqrt_mu_p / s2) *
            (sl + alpha2 * sl - hxhy2 * cl + mee.ey - 2.0 * mee.ex * mee.hx * mee.hy + alpha2 * mee.ey);
  s.v.y() = -(sqrt_mu_p / s2) *
            (-cl + alpha2 * cl + hxhy2 * sl - mee.ex + 2.0 * mee.ey * mee.hx * mee.hy + alpha2 * mee.ex);
  s.v.z() = (2.0 * sqrt_mu_p / s2) * (mee.hx * cl + mee.hy * sl + mee.ex * mee.hx + mee.ey * mee.hy);
  return s;
}

// Inverse map. Works through the equinoctial frame directly, so circular and
// equatorial orbits need no special-casing. Returns L in (-pi, pi].
inline MeeState cartesian_to_mee(const CartesianState& state, double mu) {
  const Vec3 hvec = state.r.cross(state.v);
  const double hnorm = hvec.norm();
  if (hnorm <= 0.0 || state.r.norm() <= 0.0)
    throw std::invalid_argument("cartesian_to_mee: zero angular momentum");

  MeeState mee;
  mee.p = hnorm * hnorm / mu;

  const Vec3 hhat = hvec / hnorm;
  const double denom = 1.0 + hhat.z();
  if (denom <= 1e-12)
    throw std::invalid_argument("cartesian_to_mee: retrograde equatorial orbit (i = pi) unsupported");
  mee.hx = -hhat.y() / denom;
  mee.hy = hhat.x() / denom;

  // Equinoctial in-plane basis.
  const double s2 = 1.0 + mee.hx * mee.hx + mee.hy * mee.hy;
  const double alpha2 = mee.hx * mee.hx - mee.hy * mee.hy;
  const Vec3 fhat((1.0 + alpha2) / s2, 2.0 * mee.hx * mee.hy / s2, -2.0 * mee.hy / s2);
  const Vec3 ghat(2.0 * mee.hx * mee.hy / s2, (1.0 - alpha2) / s2, 2.0 * mee.hx / s2);

  const Vec3 evec = state.v.cross(hvec) / mu - state.r.normalized();
  mee.ex = evec.dot(fhat);
  mee.ey = evec.dot(ghat);
  mee.L = std::atan2(state.r.dot(ghat), state.r.dot(fhat));
  return mee;
}

inline CartesianState coe_to_cartesian(const ClassicalElements& coe, double mu) {
  return mee_to_cartesian(coe_to_mee(coe), mu);
}

}  // namespace ltor
