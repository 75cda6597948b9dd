#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ltor/homotopy.hpp"
#include "ltor/indirect.hpp"
#include "ltor/rng.hpp"
#include "ltor/scenario.hpp"

using namespace ltor;

namespace {

CanonicalParams test_params() {
  CanonicalParams p;
  p.tmax = 5e-3;
  p.ve = 3.1;
  return p;
}

MeeState random_state(Rng& rng) {
  MeeState mee;
  mee.p = rng.uniform(1.0, 6.0);
  mee.ex = rng.uniform(-0.4, 0.4);
  mee.ey = rng.uniform(-0.4, 0.4);
  mee.hx = rng.uniform(-0.3, 0.3);
  mee.hy = rng.uniform(-0.3, 0.3);
  mee.L = rng.uniform(0.0, 30.0);
  return mee;
}

Costate random_costate(Rng& rng) {
  Costate lam;
  for (int i = 0; i < 6; ++i) lam.x[i] = rng.uniform(-1.0, 1.0);
  lam.m = rng.uniform(0.0, 1.0);
  return lam;
}

// H minimized over the control, as a function of the augmented state; the
// finite-difference oracle for the costate rates.
double h_star(const Vec7& xm, const Costate& lam, const CanonicalParams& params) {
  const GaussModel g = gauss_model(MeeState::from_vector(xm.head<6>()), params.mu);
  return optimal_hamiltonian(g, xm[6], lam, params);
}

}  // namespace

TEST_CASE("hamiltonian reduces to the Lagrangian term with zero costates and throttle") {
  Rng rng(1);
  const MeeState mee = random_state(rng);
  const double h = hamiltonian(mee, 0.8, Costate{}, ControlAngles{0.4, 0.2, 0.0}, test_params());
  CHECK(h == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("optimal control minimizes H over the unit sphere") {
  Rng rng(2);
  const CanonicalParams params = test_params();
  for (int k = 0; k < 20; ++k) {
    const MeeState mee = random_state(rng);
    const Costate lam = random_costate(rng);
    const double mass = rng.uniform(0.3, 1.0);
    const auto best = optimal_control(mee, mass, lam, params);
    REQUIRE(best.has_value());
    CHECK(std::abs(best->unit_vector().norm() - 1.0) < 1e-14);
    const double h_best = hamiltonian(mee, mass, lam, *best, params);
    for (int j = 0; j < 100; ++j) {
      const ControlAngles trial =
          ControlAngles::from_direction(rng.unit_vector(), 1.0);
      CHECK(h_best <= hamiltonian(mee, mass, lam, trial, params) + 1e-14);
    }
  }
}

TEST_CASE("switching function is negative whenever lam_m >= 0") {
  Rng rng(3);
  const CanonicalParams params = test_params();
  for (int k = 0; k < 50; ++k) {
    const MeeState mee = random_state(rng);
    Costate lam = random_costate(rng);
    lam.m = 0.0;
    const GaussModel g = gauss_model(mee, params.mu);
    CHECK(switching_function(g, rng.uniform(0.3, 1.0), lam, params) < 0.0);
  }
}

TEST_CASE("thrust direction is invariant under positive costate scaling") {
  Rng rng(4);
  const CanonicalParams params = test_params();
  for (int k = 0; k < 20; ++k) {
    const MeeState mee = random_state(rng);
    const Costate lam = random_costate(rng);
    const auto base = optimal_control(mee, 1.0, lam, params);
    REQUIRE(base.has_value());
    Costate scaled;
    const double factor = rng.uniform(0.01, 100.0);
    scaled.x = factor * lam.x;
    scaled.m = factor * lam.m;
    const auto other = optimal_control(mee, 1.0, scaled, params);
    REQUIRE(other.has_value());
    CHECK(other->alpha == doctest::Approx(base->alpha).epsilon(1e-12));
    CHECK(other->beta == doctest::Approx(base->beta).epsilon(1e-12));
  }
}

TEST_CASE("degenerate primer direction is flagged") {
  Rng rng(5);
  const MeeState mee = random_state(rng);
  CHECK_FALSE(optimal_control(mee, 1.0, Costate{}, test_params()).has_value());
}

TEST_CASE("costate rates match central finite differences of H at 100 random states") {
  Rng rng(6);
  const CanonicalParams params = test_params();
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const MeeState mee = random_state(rng);
    const Costate lam = random_costate(rng);
    Vec7 xm;
    xm << mee.vector(), rng.uniform(0.3, 1.0);

    const Vec7 analytic = costate_derivative(mee, xm[6], lam, params);

    Vec7 fd;
    for (int i = 0; i < 7; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(xm[i]));
      Vec7 plus = xm, minus = xm;
      plus[i] += h;
      minus[i] -= h;
      fd[i] = -(h_star(plus, lam, params) - h_star(minus, lam, params)) / (2.0 * h);
    }
    const double scale = std::max(1.0, analytic.template lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (analytic - fd).template lpNorm<Eigen::Infinity>() / scale);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("mass costate decreases under thrust") {
  Rng rng(7);
  const CanonicalParams params = test_params();
  for (int k = 0; k < 20; ++k) {
    const MeeState mee = random_state(rng);
    Costate lam = random_costate(rng);
    lam.x[0] += 0.5;  // keep the primer vector away from zero
    const Vec7 rate = costate_derivative(mee, 0.8, lam, params);
    CHECK(rate[6] < 0.0);
  }
}

TEST_CASE("zero costates give zero costate rates") {
  Rng rng(8);
  const Vec7 rate = costate_derivative(random_state(rng), 0.9, Costate{}, test_params());
  CHECK(rate.norm() == 0.0);
}

TEST_CASE("shooting residual matches a manual terminal evaluation") {
  Rng rng(9);
  SpacecraftScenario scenario = preset_scenario("leo_1n");
  const CanonicalParams params = scenario.canonical(50.0);
  const Vec7 y0 = scenario.initial_state();
  const BoundarySpec boundary = scenario.boundary();

  Costate lam0 = random_costate(rng);
  const double tf = 20.0;

  const auto residual = shooting_residual(lam0, tf, y0, params, boundary, scenario.ode_options());
  REQUIRE(residual.has_value());

  // Manual propagation of the same extremal flow.
  Vec14 z0;
  z0.head<7>() = y0;
  z0.tail<7>() = lam0.vector();
  const auto res = Dop853<14>::integrate(
      [&](double t, const Vec14& y, Vec14& dy) { extremal_rhs(t, y, dy, params); }, 0.0, tf, z0,
      scenario.ode_options());
  REQUIRE(res.status == OdeStatus::ok);

  for (int i = 0; i < 5; ++i)
    CHECK((*residual)[i] == doctest::Approx(boundary.target_mee[i] - res.y[i]).epsilon(1e-12));
  CHECK((*residual)[5] == doctest::Approx(-res.y[12]).epsilon(1e-12));  // lam_L(tf)
  CHECK((*residual)[6] == doctest::Approx(-res.y[13]).epsilon(1e-12));  // lam_m(tf)
  const GaussModel g = gauss_model(MeeState::from_vector(res.y.head<6>()), params.mu);
  CHECK((*residual)[7] ==
        doctest::Approx(optimal_hamiltonian(g, res.y[6], Costate::from_vector(res.y.tail<7>()), params))
            .epsilon(1e-12));
}

TEST_CASE("L-fixed residual constrains the full element vector") {
  Rng rng(10);
  SpacecraftScenario scenario = preset_scenario("leo_1n");
  scenario.target_l_mode = BoundaryMode::l_fixed;
  BoundarySpec boundary = scenario.boundary();
  boundary.target_mee[5] = 40.0;  // some unwrapped longitude target
  const CanonicalParams params = scenario.canonical(50.0);

  const auto residual =
      shooting_residual(random_costate(rng), 15.0, scenario.initial_state(), params, boundary,
                        scenario.ode_options());
  REQUIRE(residual.has_value());
  // Six state defects, then lam_m, then H: no lam_L entry in this mode.
  CHECK(residual->size() == 8);
}

TEST_CASE("50 N shooting: convergence, PMP invariants, fixed point, failure paths") {
  SpacecraftScenario scenario = preset_scenario("leo_1n");
  const double thrust_n = 50.0;
  const CanonicalParams params = scenario.canonical(thrust_n);
  const UnitSystem units = scenario.units();

  HomotopyOptions opts;
  opts.seed = 123;
  Rng rng(opts.seed);
  const TransferSolution sol = find_start_solution(scenario, thrust_n, rng, opts);
  REQUIRE(sol.converged());
  CHECK(sol.residual_norm < 1e-8);
  CHECK(sol.lam0.m > 0.0);
  CHECK(sol.revolutions >= 1);

  const double tf_days = units.days_from_canonical(sol.tf);
  CHECK(tf_days > 0.3);
  CHECK(tf_days < 5.0);

  SUBCASE("PMP invariants hold along the converged trajectory") {
    REQUIRE_FALSE(sol.trajectory.empty());
    double h_worst = 0.0;
    double lam_m_prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 400; ++i) {
      const double t = sol.tf * i / 400.0;
      const Vec14 y = sol.trajectory.eval(t);
      const GaussModel g = gauss_model(MeeState::from_vector(y.head<6>()), params.mu);
      const Costate lam = Costate::from_vector(y.tail<7>());
      h_worst = std::max(h_worst, std::abs(optimal_hamiltonian(g, y[6], lam, params)));
      CHECK(switching_function(g, y[6], lam, params) < 0.0);
      if (i < 400) CHECK(lam.m > 0.0);
      CHECK(lam.m < lam_m_prev + 1e-12);
      lam_m_prev = lam.m;
    }
    CHECK(h_worst < 1e-6);
    const Vec14 yf = sol.trajectory.eval(sol.tf);
    CHECK(std::abs(yf[13]) < 1e-8);  // lam_m(tf)
  }

  SUBCASE("re-seeding with the converged solution is a fixed point") {
    ShootingOptions sopts;
    sopts.set_tolerances(scenario.rtol, scenario.atol);
    const TransferSolution again =
        solve_tpbvp(sol.lam0, sol.tf, scenario.initial_state(), params, scenario.boundary(), sopts);
    REQUIRE(again.converged());
    CHECK(again.iterations <= 2);
    CHECK(again.tf == doctest::Approx(sol.tf).epsilon(1e-9));
  }

  SUBCASE("perturbing the converged costates produces a growing residual") {
    const auto base = shooting_residual(sol.lam0, sol.tf, scenario.initial_state(), params,
                                        scenario.boundary(), scenario.ode_options());
    REQUIRE(base.has_value());
    REQUIRE(base->lpNorm<Eigen::Infinity>() < 1e-8);

    auto perturbed_norm = [&](double eps) {
      Costate lam = sol.lam0;
      lam.x[0] += eps;
      const auto r = shooting_residual(lam, sol.tf, scenario.initial_state(), params, scenario.boundary(),
                                       scenario.ode_options());
      REQUIRE(r.has_value());
      return r->lpNorm<Eigen::Infinity>();
    };
    const double r6 = perturbed_norm(1e-6);
    const double r5 = perturbed_norm(1e-5);
    CHECK(r6 > 1e-8);
    CHECK(r5 > r6);
  }

  SUBCASE("absurd guesses fail loudly, never silently") {
    ShootingOptions sopts;
    sopts.set_tolerances(scenario.rtol, scenario.atol);
    sopts.max_iterations = 10;
    Costate lam0;
    lam0.x << 0.3, -0.2, 0.4, 0.0, 0.1, -0.3;
    lam0.m = 0.5;
    const double tf_absurd = units.time_to_canonical(1.0);  // one second
    const TransferSolution bad =
        solve_tpbvp(lam0, tf_absurd, scenario.initial_state(), params, scenario.boundary(), sopts);
    CHECK_FALSE(bad.converged());
    CHECK(bad.status != SolveStatus::converged);
  }
}
