#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ltor/elements.hpp"
#include "ltor/integrate.hpp"
#include "ltor/mee_dynamics.hpp"
#include "ltor/rng.hpp"

using namespace ltor;

namespace {

using Vec1 = Eigen::Matrix<double, 1, 1>;
using Vec2 = Eigen::Matrix<double, 2, 1>;

const ControlPolicy kCoast = [](double, const Vec7&) { return ControlAngles{0.0, 0.0, 0.0}; };

CanonicalParams coast_params() {
  CanonicalParams p;
  p.tmax = 0.0;
  p.ve = 1.0;
  return p;
}

}  // namespace

TEST_CASE("exponential growth reproduces e^t") {
  auto rhs = [](double, const Vec1& y, Vec1& dy) { dy[0] = y[0]; };
  OdeOptions opts;
  opts.rtol = 1e-12;
  opts.atol = 1e-14;
  Vec1 y0;
  y0 << 1.0;
  const auto res = Dop853<1>::integrate(rhs, 0.0, 5.0, y0, opts);
  REQUIRE(res.status == OdeStatus::ok);
  CHECK(res.y[0] == doctest::Approx(std::exp(5.0)).epsilon(1e-11));
}

TEST_CASE("harmonic oscillator over 100 periods") {
  auto rhs = [](double, const Vec2& y, Vec2& dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  OdeOptions opts;
  Vec2 y0;
  y0 << 1.0, 0.0;
  const double t1 = 200.0 * M_PI;
  const auto res = Dop853<2>::integrate(rhs, 0.0, t1, y0, opts);
  REQUIRE(res.status == OdeStatus::ok);
  CHECK(std::abs(res.y[0] - 1.0) < 1e-8);
  CHECK(std::abs(res.y[1]) < 1e-8);
}

TEST_CASE("dense output matches the analytic solution between nodes") {
  auto rhs = [](double, const Vec2& y, Vec2& dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  OdeOptions opts;
  Vec2 y0;
  y0 << 0.0, 1.0;  // sin(t)
  DenseTrajectory<2> dense;
  const auto res = Dop853<2>::integrate(rhs, 0.0, 40.0, y0, opts, &dense);
  REQUIRE(res.status == OdeStatus::ok);
  REQUIRE_FALSE(dense.empty());
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(0.0, 40.0);
    worst = std::max(worst, std::abs(dense.eval(t)[0] - std::sin(t)));
  }
  CHECK(worst < 1e-8);

  // Node continuity: dense evaluation at segment ends equals the node state.
  CHECK((dense.eval(40.0) - res.y).norm() < 1e-12);
}

TEST_CASE("backward integration works") {
  auto rhs = [](double, const Vec1& y, Vec1& dy) { dy[0] = y[0]; };
  Vec1 y0;
  y0 << std::exp(5.0);
  const auto res = Dop853<1>::integrate(rhs, 5.0, 0.0, y0, OdeOptions{});
  REQUIRE(res.status == OdeStatus::ok);
  CHECK(res.y[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("observer can halt integration") {
  auto rhs = [](double, const Vec1& y, Vec1& dy) { dy[0] = y[0]; };
  Vec1 y0;
  y0 << 1.0;
  const auto res = Dop853<1>::integrate(
      rhs, 0.0, 50.0, y0, OdeOptions{}, nullptr,
      [](double t, const Vec1&) { return t > 1.0 ? ObserverAction::halt : ObserverAction::keep_going; });
  CHECK(res.status == OdeStatus::halted);
  CHECK(res.t < 50.0);
  CHECK(res.y[0] == doctest::Approx(std::exp(res.t)).epsilon(1e-9));
}

TEST_CASE("step budget is enforced") {
  auto rhs = [](double, const Vec1& y, Vec1& dy) { dy[0] = y[0]; };
  OdeOptions opts;
  opts.max_steps = 3;
  opts.max_step = 1e-3;
  Vec1 y0;
  y0 << 1.0;
  const auto res = Dop853<1>::integrate(rhs, 0.0, 10.0, y0, opts);
  CHECK(res.status == OdeStatus::max_steps);
}

TEST_CASE("kepler coast returns to the same elements after one period") {
  // Canonical units (mu = 1), moderately eccentric orbit.
  MeeState mee;
  mee.p = 1.3 * (1.0 - 0.3 * 0.3);
  mee.ex = 0.3;
  mee.L = 0.7;
  Vec7 y0;
  y0 << mee.p, mee.ex, mee.ey, mee.hx, mee.hy, mee.L, 1.0;
  const double a = 1.3;
  const double period = 2.0 * M_PI * std::pow(a, 1.5);

  const auto res = propagate(y0, kCoast, 0.0, period, coast_params());
  REQUIRE(res.ok());
  for (int i = 0; i < 5; ++i) CHECK(std::abs(res.y_end[i] - y0[i]) < 1e-10);
  CHECK(res.y_end[5] == doctest::Approx(y0[5] + 2.0 * M_PI).epsilon(1e-10));
  CHECK(res.y_end[6] == y0[6]);  // no mass flow while coasting
}

TEST_CASE("coasting conserves orbital energy along the arc") {
  MeeState mee;
  mee.p = 2.0 * (1.0 - 0.25);  // a = 2, e = 0.5
  mee.ex = 0.35;
  mee.ey = 0.35709918499496;  // e ~ 0.5 split across components
  mee.hx = 0.1;
  mee.L = 0.0;
  Vec7 y0;
  y0 << mee.p, mee.ex, mee.ey, mee.hx, mee.hy, mee.L, 1.0;

  DenseTrajectory<7> dense;
  const auto res = propagate(y0, kCoast, 0.0, 30.0, coast_params(), OdeOptions{}, &dense);
  REQUIRE(res.ok());

  auto energy = [](const Vec7& y) {
    const CartesianState s = mee_to_cartesian(MeeState::from_vector(y.head<6>()), 1.0);
    return 0.5 * s.v.squaredNorm() - 1.0 / s.r.norm();
  };
  const double e0 = energy(y0);
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) worst = std::max(worst, std::abs(energy(dense.eval(0.3 * i)) - e0));
  CHECK(worst < 1e-11);
}

TEST_CASE("self-convergence: halving the tolerance shrinks the difference") {
  MeeState mee;
  mee.p = 1.05;
  mee.ey = 0.1;
  mee.L = 3.14;
  Vec7 y0;
  y0 << mee.p, mee.ex, mee.ey, mee.hx, mee.hy, mee.L, 1.0;
  // Low tangential thrust so the trajectory is not analytic.
  const ControlPolicy thrust = [](double, const Vec7&) { return ControlAngles{M_PI / 2.0, 0.0, 1.0}; };
  CanonicalParams params;
  params.tmax = 1e-3;
  params.ve = 3.0;

  auto run = [&](double rtol) {
    OdeOptions o;
    o.rtol = rtol;
    o.atol = rtol * 1e-2;
    return propagate(y0, thrust, 0.0, 40.0, params, o).y_end;
  };
  const Vec7 ref = run(1e-13);
  const double err_loose = (run(1e-7) - ref).norm();
  const double err_tight = (run(1e-9) - ref).norm();
  CHECK(err_tight < err_loose);
  CHECK(err_tight < 1e-7);
}

TEST_CASE("mass floor aborts the propagation") {
  Vec7 y0;
  y0 << 1.05, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const ControlPolicy full = [](double, const Vec7&) { return ControlAngles{M_PI / 2.0, 0.0, 1.0}; };
  CanonicalParams params;
  params.tmax = 0.05;
  params.ve = 0.5;  // drains the tank in 10 time units
  const auto res = propagate(y0, full, 0.0, 50.0, params);
  CHECK(res.status == OdeStatus::observer_fail);
  CHECK(res.fail == PropagationFail::mass_floor);
}
