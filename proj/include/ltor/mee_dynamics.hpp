#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "ltor/elements.hpp"
#include "ltor/integrate.hpp"

namespace ltor {

// Thrust direction in the LVLH frame (radial, transverse, normal):
// azimuth alpha measured from the radial axis toward the transverse axis,
// elevation beta out of the orbital plane. u is the throttle.
struct ControlAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double u = 0.0;

  Vec3 unit_vector() const {
    const double cb = std::cos(beta);
    return Vec3(cb * std::cos(alpha), cb * std::sin(alpha), std::sin(beta));
  }

  static ControlAngles from_direction(const Vec3& dir, double throttle) {
    ControlAngles c;
    c.beta = std::asin(std::clamp(dir.z(), -1.0, 1.0));
    c.alpha = wrap_two_pi(std::atan2(dir.y(), dir.x()));
    c.u = throttle;
    return c;
  }
};

// Nondimensional spacecraft parameters used by all solver-facing dynamics.
// mu = 1 by construction of the canonical units.
struct CanonicalParams {
  double mu = 1.0;
  double tmax = 0.0;        // thrust, canonical force units
  double ve = 0.0;          // exhaust velocity Isp*g0, canonical
  double mass_floor = 0.01; // propagation aborts below this mass
};

// Gauss variational form of the MEE equations of motion:
//   xdot = M(x) * a_lvlh + D(x)
// with cached intermediates for the costate partial contractions.
struct GaussModel {
  Mat63 M = Mat63::Zero();
  Vec6 D = Vec6::Zero();
  double p, ex, ey, hx, hy;
  double cl, sl;   // cos L, sin L
  double w;        // 1 + ex cos L + ey sin L
  double s2;       // 1 + hx^2 + hy^2
  double xi;       // hx sin L - hy cos L
  double q;        // sqrt(p / mu)
  double mu;
};

inline GaussModel gauss_model(const MeeState& mee, double mu) {
  GaussModel g;
  g.p = mee.p;
  g.ex = mee.ex;
  g.ey = mee.ey;
  g.hx = mee.hx;
  g.hy = mee.hy;
  g.mu = mu;
  g.cl = std::cos(mee.L);
  g.sl = std::sin(mee.L);
  g.w = 1.0 + mee.ex * g.cl + mee.ey * g.sl;
  if (g.p <= 0.0 || g.w <= 0.0) throw std::invalid_argument("gauss_model: degenerate state (p <= 0 or w <= 0)");
  g.s2 = 1.0 + mee.hx * mee.hx + mee.hy * mee.hy;
  g.xi = mee.hx * g.sl - mee.hy * g.cl;
  g.q = std::sqrt(mee.p / mu);

  const double q = g.q, w = g.w, cl = g.cl, sl = g.sl;
  g.M(0, 1) = q * 2.0 * mee.p / w;
  g.M(1, 0) = q * sl;
  g.M(1, 1) = q * ((w + 1.0) * cl + mee.ex) / w;
  g.M(1, 2) = -q * g.xi * mee.ey / w;
  g.M(2, 0) = -q * cl;
  g.M(2, 1) = q * ((w + 1.0) * sl + mee.ey) / w;
  g.M(2, 2) = q * g.xi * mee.ex / w;
  g.M(3, 2) = q * g.s2 * cl / (2.0 * w);
  g.M(4, 2) = q * g.s2 * sl / (2.0 * w);
  g.M(5, 2) = q * g.xi / w;
  g.D[5] = std::sqrt(mu * mee.p) * (w / mee.p) * (w / mee.p);
  return g;
}

// Gradient with respect to the six elements of lam . (M(x) a + D(x)) at
// fixed LVLH acceleration a. Row k is lam^T dM/dx_k a + lam_L dD_L/dx_k.
inline Vec6 gauss_partial_contraction(const GaussModel& g, const Vec6& lam, const Vec3& a) {
  const double q = g.q, w = g.w, cl = g.cl, sl = g.sl, s2 = g.s2, xi = g.xi;
  const double p = g.p, ex = g.ex, ey = g.ey, hx = g.hx, hy = g.hy;
  const double ar = a[0], at = a[1], an = a[2];
  const double d5 = g.D[5];
  const double w2 = w * w;
  const double n1 = (w + 1.0) * cl + ex;
  const double n2 = (w + 1.0) * sl + ey;

  Vec6 grad;
  const double lMa = lam.dot(g.M * a);

  // d/dp: uniform sqrt(p) scaling plus the explicit p in M(0,1) and D_L.
  grad[0] = 0.5 / p * lMa + lam[0] * (2.0 * q / w) * at - 1.5 * lam[5] * d5 / p;

  // d/dex (dw/dex = cos L).
  grad[1] = lam[0] * at * (-2.0 * q * p * cl / w2) +
            lam[1] * (at * q * ((cl * cl + 1.0) * w - n1 * cl) / w2 + an * q * ey * xi * cl / w2) +
            lam[2] * (at * q * (cl * sl * w - n2 * cl) / w2 + an * q * xi * (w - ex * cl) / w2) +
            lam[3] * an * (-q * s2 * cl * cl / (2.0 * w2)) +
            lam[4] * an * (-q * s2 * sl * cl / (2.0 * w2)) +
            lam[5] * (an * (-q * xi * cl / w2) + 2.0 * d5 * cl / w);

  // d/dey (dw/dey = sin L).
  grad[2] = lam[0] * at * (-2.0 * q * p * sl / w2) +
            lam[1] * (at * q * (cl * sl * w - n1 * sl) / w2 + an * (-q * xi * (w - ey * sl) / w2)) +
            lam[2] * (at * q * ((sl * sl + 1.0) * w - n2 * sl) / w2 + an * (-q * xi * ex * sl / w2)) +
            lam[3] * an * (-q * s2 * cl * sl / (2.0 * w2)) +
            lam[4] * an * (-q * s2 * sl * sl / (2.0 * w2)) +
            lam[5] * (an * (-q * xi * sl / w2) + 2.0 * d5 * sl / w);

  // d/dhx (ds2/dhx = 2 hx, dxi/dhx = sin L).
  grad[3] = an * q / w *
            (-lam[1] * ey * sl + lam[2] * ex * sl + lam[3] * hx * cl + lam[4] * hx * sl + lam[5] * sl);

  // d/dhy (ds2/dhy = 2 hy, dxi/dhy = -cos L).
  grad[4] = an * q / w *
            (lam[1] * ey * cl - lam[2] * ex * cl + lam[3] * hy * cl + lam[4] * hy * sl - lam[5] * cl);

  // d/dL.
  const double wl = -ex * sl + ey * cl;
  const double xil = hx * cl + hy * sl;
  const double n1p = wl * cl - (w + 1.0) * sl;
  const double n2p = wl * sl + (w + 1.0) * cl;
  const double xirat = (xil * w - xi * wl) / w2;
  grad[5] = lam[0] * at * (-2.0 * q * p * wl / w2) +
            lam[1] * (ar * q * cl + at * q * (n1p * w - n1 * wl) / w2 - an * q * ey * xirat) +
            lam[2] * (ar * q * sl + at * q * (n2p * w - n2 * wl) / w2 + an * q * ex * xirat) +
            lam[3] * an * q * s2 * (-sl * w - cl * wl) / (2.0 * w2) +
            lam[4] * an * q * s2 * (cl * w - sl * wl) / (2.0 * w2) +
            lam[5] * (an * q * xirat + 2.0 * d5 * wl / w);
  return grad;
}

// State is [p, ex, ey, hx, hy, L, m].
inline Vec7 state_derivative(const Vec7& y, const ControlAngles& control, const CanonicalParams& params) {
  if (y[6] <= 0.0) throw std::invalid_argument("state_derivative: nonpositive mass");
  const GaussModel g = gauss_model(MeeState::from_vector(y.head<6>()), params.mu);
  const double accel = control.u * params.tmax / y[6];
  Vec7 dy;
  dy.head<6>() = g.M * (accel * control.unit_vector()) + g.D;
  dy[6] = -control.u * params.tmax / params.ve;
  return dy;
}

using ControlPolicy = std::function<ControlAngles(double, const Vec7&)>;
using ExtraAcceleration = std::function<Vec3(double, const Vec7&)>;  // LVLH frame

enum class PropagationFail { none, mass_floor, non_finite };

struct PropagationResult {
  OdeStatus status = OdeStatus::ok;
  PropagationFail fail = PropagationFail::none;
  double t_end = 0.0;
  Vec7 y_end = Vec7::Zero();
  std::int64_t n_steps = 0;
  std::int64_t n_rhs = 0;
  bool ok() const { return status == OdeStatus::ok || status == OdeStatus::halted; }
};

// Adaptive propagation of the controlled MEE dynamics. The observer (if any)
// runs at every accepted step and may halt or fail the run; the mass floor
// and finiteness guards are always active.
inline PropagationResult propagate(const Vec7& y0, const ControlPolicy& policy, double t0, double t1,
                                   const CanonicalParams& params, const OdeOptions& opts = {},
                                   DenseTrajectory<7>* dense = nullptr,
                                   const Dop853<7>::Observer& observer = nullptr,
                                   const ExtraAcceleration& extra_accel = nullptr) {
  auto rhs = [&](double t, const Vec7& y, Vec7& dydt) {
    if (y[6] <= 0.0 || y[0] <= 0.0) {
      dydt.setConstant(std::numeric_limits<double>::quiet_NaN());
      return;
    }
    const GaussModel g = gauss_model(MeeState::from_vector(y.head<6>()), params.mu);
    const ControlAngles c = policy(t, y);
    Vec3 accel = (c.u * params.tmax / y[6]) * c.unit_vector();
    if (extra_accel) accel += extra_accel(t, y);
    dydt.head<6>() = g.M * accel + g.D;
    dydt[6] = -c.u * params.tmax / params.ve;
  };
  PropagationResult out;
  auto guard = [&](double t, const Vec7& y) -> ObserverAction {
    if (!y.allFinite()) {
      out.fail = PropagationFail::non_finite;
      return ObserverAction::fail;
    }
    if (y[6] < params.mass_floor) {
      out.fail = PropagationFail::mass_floor;
      return ObserverAction::fail;
    }
    return observer ? observer(t, y) : ObserverAction::keep_going;
  };
  const OdeResult<7> r = Dop853<7>::integrate(rhs, t0, t1, y0, opts, dense, guard);
  out.status = r.status;
  out.t_end = r.t;
  out.y_end = r.y;
  out.n_steps = r.n_steps;
  out.n_rhs = r.n_rhs;
  if (out.status == OdeStatus::non_finite) out.fail = PropagationFail::non_finite;
  return out;
}

}  // namespace ltor
