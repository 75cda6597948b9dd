#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace ltor {

enum class NewtonStatus { converged, max_iterations, singular_jacobian, eval_failure };

struct NewtonOptions {
  double tol_inf = 1e-8;
  int max_iterations = 100;
  double fd_step = 1e-7;   // forward-difference step on O(1)-scaled variables
  int threads = 2;         // Jacobian columns evaluated concurrently
  int max_backtracks = 6;
};

struct NewtonResult {
  NewtonStatus status = NewtonStatus::max_iterations;
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  int iterations = 0;
  double residual_inf = std::numeric_limits<double>::infinity();
};

namespace detail {

using ResidualFn = std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd&)>;

// Forward-difference Jacobian with concurrently evaluated columns.
inline bool fd_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x, const Eigen::VectorXd& f,
                        const NewtonOptions& opts, Eigen::MatrixXd& jac) {
  const int n = static_cast<int>(x.size());
  jac.resize(f.size(), n);
  std::vector<std::optional<Eigen::VectorXd>> cols(n);
  std::vector<double> steps(n);
  std::atomic<int> next{0};
  const int workers = std::max(1, std::min(opts.threads, n));
  std::vector<std::future<void>> futures;
  for (int w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&]() {
      int j;
      while ((j = next.fetch_add(1)) < n) {
        const double h = opts.fd_step * std::max(1.0, std::abs(x[j]));
        Eigen::VectorXd xp = x;
        xp[j] += h;
        steps[j] = h;
        cols[j] = fn(xp);
      }
    }));
  }
  for (auto& fu : futures) fu.get();
  for (int j = 0; j < n; ++j) {
    if (!cols[j] || !cols[j]->allFinite()) {
      const double h = steps[j] / 100.0;  // one retry with a smaller perturbation
      Eigen::VectorXd xp = x;
      xp[j] += h;
      const auto again = fn(xp);
      if (!again || !again->allFinite()) return false;
      jac.col(j) = (*again - f) / h;
    } else {
      jac.col(j) = (*cols[j] - f) / steps[j];
    }
  }
  return true;
}

// Powell-style dogleg trust region with Broyden updates (MINPACK hybrd
// lineage): variable scaling by Jacobian column norms, radius adaptation on
// the gain ratio, Jacobian refresh after repeated failures.
inline NewtonStatus powell_dogleg(const ResidualFn& fn, Eigen::VectorXd& x, Eigen::VectorXd& f,
                                  Eigen::MatrixXd& jac, const NewtonOptions& opts, int& iters_used,
                                  int budget) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd scale(n);
  auto refresh_scale = [&](bool grow_only) {
    for (int j = 0; j < n; ++j) {
      const double cn = jac.col(j).norm();
      if (!grow_only)
        scale[j] = (cn > 0.0) ? cn : 1.0;
      else if (cn > scale[j])
        scale[j] = cn;
    }
  };
  refresh_scale(false);

  double fnorm = f.norm();
  double delta = 100.0 * scale.cwiseProduct(x).norm();
  if (delta <= 0.0) delta = 100.0;
  int ncfail = 0, ncsuc = 0;
  double best_norm = fnorm;
  int since_best = 0;

  for (; budget > 0; --budget, ++iters_used) {
    if (f.lpNorm<Eigen::Infinity>() < opts.tol_inf) return NewtonStatus::converged;

    // Merit local minima are common in shooting problems; quit early and let
    // the caller restart rather than polishing a non-root.
    if (fnorm < 0.98 * best_norm) {
      best_norm = fnorm;
      since_best = 0;
    } else if (++since_best > 80) {
      return NewtonStatus::max_iterations;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    const Eigen::VectorXd gn = qr.solve(-f);
    const bool gn_ok = gn.allFinite();

    // Dogleg step in scaled variables.
    Eigen::VectorXd p;
    const Eigen::VectorXd g = jac.transpose() * f;  // gradient of 0.5 |F|^2
    if (gn_ok && scale.cwiseProduct(gn).norm() <= delta) {
      p = gn;
    } else {
      const Eigen::VectorXd gs = g.cwiseQuotient(scale);          // scaled gradient
      const Eigen::VectorXd sd = -gs.cwiseQuotient(scale);        // descent direction, unscaled vars
      const double jsd_n2 = (jac * sd).squaredNorm();
      if (jsd_n2 <= 0.0 || !sd.allFinite()) return NewtonStatus::singular_jacobian;
      const double t_cauchy = g.cwiseQuotient(scale).squaredNorm() / jsd_n2;
      Eigen::VectorXd cauchy = t_cauchy * sd;
      const double cauchy_norm = scale.cwiseProduct(cauchy).norm();
      if (!gn_ok) {
        p = (cauchy_norm <= delta) ? cauchy : Eigen::VectorXd(delta / cauchy_norm * cauchy);
      } else if (cauchy_norm >= delta) {
        p = delta / cauchy_norm * cauchy;
      } else {
        const Eigen::VectorXd a = scale.cwiseProduct(cauchy);
        const Eigen::VectorXd b = scale.cwiseProduct(gn);
        const Eigen::VectorXd d = b - a;
        const double qa = d.squaredNorm();
        const double qb = 2.0 * a.dot(d);
        const double qc = a.squaredNorm() - delta * delta;
        const double tau = (-qb + std::sqrt(std::max(0.0, qb * qb - 4.0 * qa * qc))) / (2.0 * qa);
        p = cauchy + tau * (gn - cauchy);
      }
    }
    const double pnorm = scale.cwiseProduct(p).norm();
    if (!(pnorm > 0.0) || !p.allFinite()) return NewtonStatus::singular_jacobian;

    const auto f_trial = fn(x + p);
    const double fnorm1 = (f_trial && f_trial->allFinite())
                              ? f_trial->norm()
                              : std::numeric_limits<double>::infinity();

    const double predicted = 1.0 - std::pow((f + jac * p).norm() / fnorm, 2);
    const double actual = std::isfinite(fnorm1) && fnorm1 < fnorm ? 1.0 - std::pow(fnorm1 / fnorm, 2) : -1.0;
    const double ratio = predicted > 0.0 ? actual / predicted : 0.0;

    if (ratio < 0.1) {
      ++ncfail;
      ncsuc = 0;
      delta = 0.5 * delta;
    } else {
      ncfail = 0;
      ++ncsuc;
      if (ratio >= 0.5 || ncsuc > 1) delta = std::max(delta, 2.0 * pnorm);
      if (std::abs(ratio - 1.0) <= 0.1) delta = 2.0 * pnorm;
    }

    bool accepted = false;
    if (std::isfinite(fnorm1) && ratio >= 1e-4) {
      const Eigen::VectorXd df = *f_trial - f;
      x += p;
      f = *f_trial;
      fnorm = fnorm1;
      accepted = true;
      // Broyden rank-1 update keeps the model alive between refreshes.
      jac += (df - jac * p) * p.transpose() / p.squaredNorm();
    }

    if (delta < 1e-13 * (1.0 + scale.cwiseProduct(x).norm()))
      return NewtonStatus::max_iterations;  // radius collapse: stagnated

    if (ncfail >= 2) {
      if (!fd_jacobian(fn, x, f, opts, jac)) return NewtonStatus::eval_failure;
      refresh_scale(true);
      ncfail = 0;
    } else if (!accepted && !std::isfinite(fnorm1)) {
      // Trial landed in unevaluable territory; shrink and carry on.
      delta = 0.25 * delta;
    }
  }
  return NewtonStatus::max_iterations;
}

}  // namespace detail

// Damped Newton for F(x) = 0 with forward-difference Jacobian and
// backtracking line search on |F|; falls back to a Powell dogleg trust-region
// phase when the line search stagnates. F returns nullopt when it cannot be
// evaluated (e.g. propagation failure).
inline NewtonResult newton_solve(const detail::ResidualFn& fn, Eigen::VectorXd x0,
                                 const NewtonOptions& opts = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const int n = static_cast<int>(x0.size());

  NewtonResult res;
  res.x = x0;

  std::optional<VectorXd> f0 = fn(x0);
  if (!f0 || !f0->allFinite()) {
    res.status = NewtonStatus::eval_failure;
    return res;
  }
  VectorXd f = *f0;
  VectorXd x = x0;
  MatrixXd jac;

  auto finish = [&](NewtonStatus status) {
    res.x = x;
    res.residual = f;
    res.residual_inf = f.lpNorm<Eigen::Infinity>();
    res.status = res.residual_inf < opts.tol_inf ? NewtonStatus::converged : status;
    return res;
  };

  int iter = 0;
  int weak_steps = 0;
  while (iter < opts.max_iterations) {
    res.iterations = iter;
    if (f.lpNorm<Eigen::Infinity>() < opts.tol_inf) return finish(NewtonStatus::converged);

    if (!detail::fd_jacobian(fn, x, f, opts, jac)) return finish(NewtonStatus::eval_failure);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(jac);
    if (qr.rank() < n) return finish(NewtonStatus::singular_jacobian);
    const VectorXd step = qr.solve(-f);
    if (!step.allFinite()) return finish(NewtonStatus::singular_jacobian);

    // Backtracking on |F|.
    const double fnorm = f.norm();
    double damping = 1.0;
    bool advanced = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      const auto ft = fn(x + damping * step);
      if (ft && ft->allFinite() && ft->norm() < fnorm * (1.0 - 1e-4 * damping)) {
        x += damping * step;
        f = *ft;
        advanced = true;
        break;
      }
      damping *= 0.5;
    }
    ++iter;

    weak_steps = (advanced && damping == 1.0) ? 0 : weak_steps + 1;
    if (!advanced || weak_steps >= 3) {
      // Line search is creeping: hand over to the dogleg. Its iterations are
      // single residual evaluations, so the budget trades at the cost of one
      // Newton iteration (~n evaluations) per n dogleg steps.
      int used = iter;
      const int budget = (opts.max_iterations - iter) * (n + 1);
      const NewtonStatus status = detail::powell_dogleg(fn, x, f, jac, opts, used, budget);
      res.iterations = used;
      return finish(status);
    }
  }
  res.iterations = iter;
  return finish(NewtonStatus::max_iterations);
}

}  // namespace ltor
