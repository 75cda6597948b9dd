#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "ltor/elements.hpp"
#include "ltor/integrate.hpp"
#include "ltor/mee_dynamics.hpp"

namespace ltor {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Vec14 = Eigen::Matrix<double, 14, 1>;

// Costates conjugate to (p, ex, ey, hx, hy, L) and to mass.
struct Costate {
  Vec6 x = Vec6::Zero();
  double m = 0.0;

  Vec7 vector() const {
    Vec7 v;
    v.head<6>() = x;
    v[6] = m;
    return v;
  }
  static Costate from_vector(const Vec7& v) { return Costate{v.head<6>(), v[6]}; }
};

// Minimum-time thrust direction: along -M^T lam_x. Returns nullopt when the
// primer direction is degenerate (|M^T lam_x| below 1e-14).
inline std::optional<ControlAngles> optimal_control(const GaussModel& g, const Costate& lam) {
  const Vec3 mtl = g.M.transpose() * lam.x;
  const double n = mtl.norm();
  if (n < 1e-14) return std::nullopt;
  return ControlAngles::from_direction(-mtl / n, 1.0);
}

inline std::optional<ControlAngles> optimal_control(const MeeState& mee, double /*mass*/, const Costate& lam,
                                                    const CanonicalParams& params) {
  return optimal_control(gauss_model(mee, params.mu), lam);
}

// Switching function; strictly negative on minimum-time extremals.
inline double switching_function(const GaussModel& g, double mass, const Costate& lam,
                                 const CanonicalParams& params) {
  return -params.ve * (g.M.transpose() * lam.x).norm() / mass - lam.m;
}

inline double hamiltonian(const GaussModel& g, double mass, const Costate& lam, const ControlAngles& control,
                          const CanonicalParams& params) {
  const double thrust_term =
      control.u * params.tmax / mass * lam.x.dot(g.M * control.unit_vector());
  return thrust_term + lam.x.dot(g.D) - control.u * params.tmax * lam.m / params.ve + 1.0;
}

inline double hamiltonian(const MeeState& mee, double mass, const Costate& lam, const ControlAngles& control,
                          const CanonicalParams& params) {
  return hamiltonian(gauss_model(mee, params.mu), mass, lam, control, params);
}

// H evaluated under the minimizing control (u = 1, primer direction).
inline double optimal_hamiltonian(const GaussModel& g, double mass, const Costate& lam,
                                  const CanonicalParams& params) {
  const double n = (g.M.transpose() * lam.x).norm();
  return -params.tmax / mass * n + lam.x.dot(g.D) - params.tmax * lam.m / params.ve + 1.0;
}

// Costate rates -dH/d(x, m) under the given LVLH thrust acceleration vector
// (magnitude included). lam_m rate uses the unit direction separately.
inline Vec7 costate_rate(const GaussModel& g, double mass, const Costate& lam, double throttle,
                         const Vec3& thrust_dir, const CanonicalParams& params) {
  const double accel = throttle * params.tmax / mass;
  const Vec6 grad = gauss_partial_contraction(g, lam.x, accel * thrust_dir);
  Vec7 rate;
  rate.head<6>() = -grad;
  rate[6] = throttle * params.tmax / (mass * mass) * lam.x.dot(g.M * thrust_dir);
  return rate;
}

// Costate rates under the optimal (minimum-time) control.
inline Vec7 costate_derivative(const MeeState& mee, double mass, const Costate& lam,
                               const CanonicalParams& params) {
  const GaussModel g = gauss_model(mee, params.mu);
  const Vec3 mtl = g.M.transpose() * lam.x;
  const double n = mtl.norm();
  const Vec3 dir = (n < 1e-14) ? Vec3::Zero().eval() : Vec3(-mtl / n);
  return costate_rate(g, mass, lam, 1.0, dir, params);
}

// Augmented state y = [p, ex, ey, hx, hy, L, m, lam_x (6), lam_m];
// full-throttle extremal dynamics used by the shooting method.
inline void extremal_rhs(double /*t*/, const Vec14& y, Vec14& dydt, const CanonicalParams& params) {
  if (y[6] <= 0.0 || y[0] <= 0.0) {
    dydt.setConstant(std::numeric_limits<double>::quiet_NaN());
    return;
  }
  const GaussModel g = gauss_model(MeeState::from_vector(y.head<6>()), params.mu);
  const double mass = y[6];
  const Costate lam = Costate::from_vector(y.tail<7>());

  const Vec3 mtl = g.M.transpose() * lam.x;
  const double n = mtl.norm();
  const Vec3 dir = (n < 1e-14) ? Vec3::Zero().eval() : Vec3(-mtl / n);

  const double accel = params.tmax / mass;
  dydt.head<6>() = g.M * (accel * dir) + g.D;
  dydt[6] = -params.tmax / params.ve;

  const Vec6 grad = gauss_partial_contraction(g, lam.x, accel * dir);
  dydt.segment<6>(7) = -grad;
  dydt[13] = params.tmax / (mass * mass) * lam.x.dot(g.M * dir);
}

enum class BoundaryMode { l_free, l_fixed };

// Terminal conditions. Masks follow the complementarity rule: a free state
// component turns on the corresponding terminal costate condition instead.
struct BoundarySpec {
  Vec6 target_mee = Vec6::Zero();  // canonical units; L entry used only in l_fixed mode
  BoundaryMode mode = BoundaryMode::l_free;

  std::array<int, 7> bx() const {
    return mode == BoundaryMode::l_free ? std::array<int, 7>{1, 1, 1, 1, 1, 0, 0}
                                        : std::array<int, 7>{1, 1, 1, 1, 1, 1, 0};
  }
  std::array<int, 7> blam() const {
    return mode == BoundaryMode::l_free ? std::array<int, 7>{0, 0, 0, 0, 0, 1, 1}
                                        : std::array<int, 7>{0, 0, 0, 0, 0, 0, 1};
  }
};

enum class SolveStatus { converged, max_iterations, singular_jacobian, propagation_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::singular_jacobian: return "singular_jacobian";
    case SolveStatus::propagation_failure: return "propagation_failure";
  }
  return "unknown";
}

struct ShootingOptions {
  double tol_inf = 1e-8;
  int max_iterations = 100;
  double fd_step = 1e-7;
  int jacobian_threads = 2;
  OdeOptions ode{1e-10, 1e-12, std::numeric_limits<double>::infinity(), 300'000};

  void set_tolerances(double rtol, double atol) {
    ode.rtol = rtol;
    ode.atol = atol;
  }
};

struct TransferSolution {
  Costate lam0;
  double tf = 0.0;  // canonical time
  double residual_norm = 0.0;
  int revolutions = 0;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iterations;
  DenseTrajectory<14> trajectory;  // filled on convergence

  bool converged() const { return status == SolveStatus::converged; }
};

// Shooting residual for the minimum-time TPBVP. Returns the 8 active
// components: masked state defects, masked terminal costates, and H(t_f).
// nullopt signals a propagation failure.
std::optional<Vec8> shooting_residual(const Costate& lam0, double tf, const Vec7& y0,
                                      const CanonicalParams& params, const BoundarySpec& boundary,
                                      const OdeOptions& ode);

// Damped-Newton single shooting on (lam0, t_f).
TransferSolution solve_tpbvp(const Costate& lam0_guess, double tf_guess, const Vec7& y0,
                             const CanonicalParams& params, const BoundarySpec& boundary,
                             const ShootingOptions& opts = {});

}  // namespace ltor
