#include "ltor/indirect.hpp"

#include <cmath>

#include "ltor/newton.hpp"

namespace ltor {

namespace {

struct TerminalState {
  Vec14 y;
  bool ok;
};

TerminalState propagate_extremal(const Vec7& y0, const Costate& lam0, double tf,
                                 const CanonicalParams& params, const OdeOptions& ode,
                                 DenseTrajectory<14>* dense = nullptr) {
  Vec14 z0;
  z0.head<7>() = y0;
  z0.tail<7>() = lam0.vector();
  auto rhs = [&params](double t, const Vec14& y, Vec14& dydt) { extremal_rhs(t, y, dydt, params); };
  auto guard = [&params](double, const Vec14& y) -> ObserverAction {
    if (!y.allFinite()) return ObserverAction::fail;
    if (y[6] < params.mass_floor) return ObserverAction::fail;
    return ObserverAction::keep_going;
  };
  const OdeResult<14> r = Dop853<14>::integrate(rhs, 0.0, tf, z0, ode, dense, guard);
  return TerminalState{r.y, r.status == OdeStatus::ok};
}

Vec8 assemble_residual(const Vec14& yf, const CanonicalParams& params, const BoundarySpec& boundary) {
  const MeeState mee_f = MeeState::from_vector(yf.head<6>());
  const Costate lam_f = Costate::from_vector(yf.tail<7>());
  const GaussModel g = gauss_model(mee_f, params.mu);

  Vec8 r;
  int idx = 0;
  const int n_state = boundary.mode == BoundaryMode::l_free ? 5 : 6;
  for (int i = 0; i < n_state; ++i) r[idx++] = boundary.target_mee[i] - yf[i];
  if (boundary.mode == BoundaryMode::l_free) r[idx++] = -lam_f.x[5];  // lam_L(t_f) = 0
  r[idx++] = -lam_f.m;                                                // free final mass
  r[idx++] = optimal_hamiltonian(g, yf[6], lam_f, params);            // transversality
  return r;
}

NewtonOptions to_newton(const ShootingOptions& opts) {
  NewtonOptions n;
  n.tol_inf = opts.tol_inf;
  n.max_iterations = opts.max_iterations;
  n.fd_step = opts.fd_step;
  n.threads = opts.jacobian_threads;
  return n;
}

SolveStatus to_solve_status(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return SolveStatus::converged;
    case NewtonStatus::singular_jacobian: return SolveStatus::singular_jacobian;
    case NewtonStatus::eval_failure: return SolveStatus::propagation_failure;
    default: return SolveStatus::max_iterations;
  }
}

}  // namespace

std::optional<Vec8> shooting_residual(const Costate& lam0, double tf, const Vec7& y0,
                                      const CanonicalParams& params, const BoundarySpec& boundary,
                                      const OdeOptions& ode) {
  if (!(tf > 0.0)) return std::nullopt;
  const TerminalState term = propagate_extremal(y0, lam0, tf, params, ode);
  if (!term.ok) return std::nullopt;
  return assemble_residual(term.y, params, boundary);
}

// The extremal flow is positively homogeneous in the costates: scaling
// (lam_x, lam_m) leaves the state trajectory and controls unchanged, and only
// H(t_f) = 0 pins the costate magnitude. A raw Newton on (lam0, t_f) sees a
// narrow curved valley along that scale direction and stalls, so the solve
// runs in two stages:
//   1. scale-free stage: unknowns (lam_x0 with |lam_x0| pinned to 1 by an
//      explicit equation, t_f); lam_m0 is slaved (its equation integrates in
//      quadrature) and the costate magnitude follows from H(t_f) = 0;
//   2. polish stage: damped Newton on the full (lam0 in R^7, t_f) shooting
//      system, which starts inside its basin and certifies |Phi|_inf.
TransferSolution solve_tpbvp(const Costate& lam0_guess, double tf_guess, const Vec7& y0,
                             const CanonicalParams& params, const BoundarySpec& boundary,
                             const ShootingOptions& opts) {
  TransferSolution sol;
  sol.lam0 = lam0_guess;
  sol.tf = tf_guess;
  if (!(tf_guess > 0.0) || lam0_guess.x.norm() < 1e-12) {
    sol.status = SolveStatus::propagation_failure;
    return sol;
  }

  const double tf_ref = tf_guess;
  const int n_state = boundary.mode == BoundaryMode::l_free ? 5 : 6;

  // Stage 1: scale-free system F(lam_x0, tau) = [state defects,
  // lam_L(tf) (L-free), |lam_x0|^2 - 1].
  auto stage1 = [&](const Eigen::VectorXd& z) -> std::optional<Eigen::VectorXd> {
    Costate lam0;
    lam0.x = z.head<6>();
    lam0.m = 0.0;
    const double tf = z[6] * tf_ref;
    if (!(tf > 0.0)) return std::nullopt;
    const TerminalState term = propagate_extremal(y0, lam0, tf, params, opts.ode);
    if (!term.ok) return std::nullopt;
    Eigen::VectorXd r(7);
    int idx = 0;
    for (int i = 0; i < n_state; ++i) r[idx++] = boundary.target_mee[i] - term.y[i];
    if (boundary.mode == BoundaryMode::l_free) r[idx++] = -term.y[12];
    r[idx++] = z.head<6>().squaredNorm() - 1.0;
    return r;
  };

  Eigen::VectorXd z1(7);
  z1.head<6>() = lam0_guess.x / lam0_guess.x.norm();
  z1[6] = 1.0;

  NewtonOptions nopts1 = to_newton(opts);
  nopts1.tol_inf = std::min(1e-9, opts.tol_inf);
  const NewtonResult r1 = newton_solve(stage1, z1, nopts1);
  sol.iterations = r1.iterations;
  if (r1.status != NewtonStatus::converged && r1.residual_inf > 1e-6) {
    sol.status = to_solve_status(r1.status);
    sol.residual_norm = r1.residual_inf;
    return sol;
  }

  // Recover the costate magnitude from H(t_f) = 0 and the slaved lam_m0.
  Costate lam_hat;
  lam_hat.x = r1.x.head<6>();
  lam_hat.m = 0.0;
  const double tf1 = r1.x[6] * tf_ref;
  const TerminalState term = propagate_extremal(y0, lam_hat, tf1, params, opts.ode);
  if (!term.ok) {
    sol.status = SolveStatus::propagation_failure;
    return sol;
  }
  const GaussModel gf = gauss_model(MeeState::from_vector(term.y.head<6>()), params.mu);
  const double primer_f = (gf.M.transpose() * term.y.segment<6>(7)).norm();
  const double denom = params.tmax / term.y[6] * primer_f - term.y[12] * gf.D[5];
  if (!(denom > 0.0)) {
    sol.status = SolveStatus::max_iterations;  // max-time branch; let the caller restart
    sol.residual_norm = r1.residual_inf;
    return sol;
  }
  const double scale = 1.0 / denom;

  Costate lam_full;
  lam_full.x = scale * lam_hat.x;
  lam_full.m = -scale * term.y[13];  // lam_m(tf; lam_m0 = 0) = -integral

  // Stage 2: certify/polish the full shooting system of Eq-form residuals.
  auto stage2 = [&](const Eigen::VectorXd& z) -> std::optional<Eigen::VectorXd> {
    const Costate lam0 = Costate::from_vector(z.head<7>());
    const double tf = z[7] * tf_ref;
    const auto r = shooting_residual(lam0, tf, y0, params, boundary, opts.ode);
    if (!r) return std::nullopt;
    return Eigen::VectorXd(*r);
  };
  Eigen::VectorXd z2(8);
  z2.head<7>() = lam_full.vector();
  z2[7] = tf1 / tf_ref;
  NewtonOptions nopts2 = to_newton(opts);
  nopts2.max_iterations = 25;
  const NewtonResult r2 = newton_solve(stage2, z2, nopts2);

  sol.lam0 = Costate::from_vector(r2.x.head<7>());
  sol.tf = r2.x[7] * tf_ref;
  sol.iterations += r2.iterations;
  sol.residual_norm = r2.residual_inf;
  sol.status = to_solve_status(r2.status);
  if (sol.status != SolveStatus::converged) return sol;

  // Final dense propagation for downstream consumers.
  const TerminalState full = propagate_extremal(y0, sol.lam0, sol.tf, params, opts.ode, &sol.trajectory);
  if (!full.ok) {
    sol.status = SolveStatus::propagation_failure;
    return sol;
  }
  sol.revolutions = static_cast<int>(std::floor((full.y[5] - y0[5]) / (2.0 * M_PI)));
  return sol;
}

}  // namespace ltor
