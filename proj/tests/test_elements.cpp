#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ltor/elements.hpp"
#include "ltor/rng.hpp"

using namespace ltor;

namespace {

constexpr double kMu = 398600.4418;  // km^3/s^2

double wrapped_diff(double a, double b) { return std::remainder(a - b, 2.0 * M_PI); }

double rel(double x, double ref) { return std::abs(x - ref) / std::max(1.0, std::abs(ref)); }

ClassicalElements random_elliptic(Rng& rng) {
  ClassicalElements coe;
  coe.a = rng.uniform(6600.0, 60000.0);
  coe.e = rng.uniform(0.0, 0.85);
  coe.inc = rng.uniform(0.0, 2.6);
  coe.raan = rng.uniform(0.0, 2.0 * M_PI);
  coe.argp = rng.uniform(0.0, 2.0 * M_PI);
  coe.ta = rng.uniform(0.0, 2.0 * M_PI);
  return coe;
}

}  // namespace

TEST_CASE("coe_to_mee: circular equatorial GEO is the identity case") {
  ClassicalElements coe;
  coe.a = 42164.0;
  const MeeState mee = coe_to_mee(coe);
  CHECK(mee.p == doctest::Approx(42164.0).epsilon(1e-15));
  CHECK(mee.ex == 0.0);
  CHECK(mee.ey == 0.0);
  CHECK(mee.hx == 0.0);
  CHECK(mee.hy == 0.0);
  CHECK(mee.L == 0.0);
}

TEST_CASE("coe_to_mee: inclined circular LEO") {
  ClassicalElements coe;
  coe.a = 6671.0;
  coe.inc = deg_to_rad(5.0);
  const MeeState mee = coe_to_mee(coe);
  CHECK(mee.p == doctest::Approx(6671.0).epsilon(1e-15));
  CHECK(mee.hx == doctest::Approx(std::tan(deg_to_rad(2.5))).epsilon(1e-15));
  CHECK(mee.hy == 0.0);
  CHECK(mee.ex == 0.0);
  CHECK(mee.ey == 0.0);
  CHECK(mee.L == 0.0);
}

TEST_CASE("coe_to_mee: GTO semilatus rectum from conic relations") {
  // Oracle: p = 2 rp ra / (rp + ra), independently of Eq-style a(1 - e^2).
  const double rp = 6671.0, ra = 42164.0;
  ClassicalElements coe;
  coe.a = 0.5 * (rp + ra);
  coe.e = (ra - rp) / (ra + rp);
  coe.inc = deg_to_rad(5.0);
  coe.ta = M_PI;
  CHECK(coe.a == doctest::Approx(24417.5).epsilon(1e-15));

  const MeeState mee = coe_to_mee(coe);
  const double p_oracle = 2.0 * rp * ra / (rp + ra);
  CHECK(mee.p == doctest::Approx(p_oracle).epsilon(1e-14));
  CHECK(mee.p == doctest::Approx(coe.a * (1.0 - coe.e * coe.e)).epsilon(1e-14));
  CHECK(mee.L == doctest::Approx(M_PI).epsilon(1e-15));
}

TEST_CASE("coe_to_mee rejects parabolic and hyperbolic orbits") {
  ClassicalElements coe;
  coe.a = 10000.0;
  coe.e = 1.0;
  CHECK_THROWS_AS(coe_to_mee(coe), std::invalid_argument);
  coe.e = 1.3;
  CHECK_THROWS_AS(coe_to_mee(coe), std::invalid_argument);
}

TEST_CASE("mee_to_coe: GEO slot") {
  MeeState mee;
  mee.p = 42164.0;
  mee.L = M_PI;
  const ClassicalElements coe = mee_to_coe(mee);
  CHECK(coe.a == doctest::Approx(42164.0).epsilon(1e-15));
  CHECK(coe.e == 0.0);
  CHECK(coe.inc == 0.0);
}

TEST_CASE("mee -> coe -> mee round-trip under 1e-12 relative") {
  Rng rng(42);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const MeeState mee = coe_to_mee(random_elliptic(rng));
    const MeeState back = coe_to_mee(mee_to_coe(mee));
    worst = std::max(worst, rel(back.p, mee.p));
    worst = std::max(worst, rel(back.ex, mee.ex));
    worst = std::max(worst, rel(back.ey, mee.ey));
    worst = std::max(worst, rel(back.hx, mee.hx));
    worst = std::max(worst, rel(back.hy, mee.hy));
    worst = std::max(worst, std::abs(wrapped_diff(back.L, mee.L)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("mee_to_cartesian: GEO circular radius and vis-viva speed") {
  MeeState mee;
  mee.p = 42164.0;
  mee.L = 1.234;
  const CartesianState s = mee_to_cartesian(mee, kMu);
  CHECK(s.r.norm() == doctest::Approx(42164.0).epsilon(1e-13));
  CHECK(s.v.norm() == doctest::Approx(std::sqrt(kMu / 42164.0)).epsilon(1e-13));
  CHECK(s.r.dot(s.v) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("mee_to_cartesian: zero-inclination orbit stays in the plane") {
  MeeState mee;
  mee.p = 8000.0;
  mee.ex = 0.1;
  mee.L = 2.2;
  const CartesianState s = mee_to_cartesian(mee, kMu);
  CHECK(s.r.z() == 0.0);
  CHECK(s.v.z() == 0.0);
}

TEST_CASE("cartesian_to_mee rejects degenerate states") {
  CartesianState s;
  s.r = Vec3(7000.0, 0.0, 0.0);
  s.v = Vec3(2.0, 0.0, 0.0);  // parallel to r: zero angular momentum
  CHECK_THROWS_AS(cartesian_to_mee(s, kMu), std::invalid_argument);
}

TEST_CASE("mee <-> cartesian round-trip under 1e-10") {
  Rng rng(7);
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    MeeState mee = coe_to_mee(random_elliptic(rng));
    const CartesianState s = mee_to_cartesian(mee, kMu);
    const MeeState back = cartesian_to_mee(s, kMu);
    worst = std::max(worst, rel(back.p, mee.p));
    worst = std::max(worst, rel(back.ex, mee.ex));
    worst = std::max(worst, rel(back.ey, mee.ey));
    worst = std::max(worst, rel(back.hx, mee.hx));
    worst = std::max(worst, rel(back.hy, mee.hy));
    worst = std::max(worst, std::abs(wrapped_diff(back.L, mee.L)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("full coe <-> mee <-> eci chain round-trip over 10^4 states") {
  Rng rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const ClassicalElements coe = random_elliptic(rng);
    const MeeState mee = coe_to_mee(coe);
    const CartesianState s = mee_to_cartesian(mee, kMu);
    const ClassicalElements back = mee_to_coe(cartesian_to_mee(s, kMu));
    worst = std::max(worst, rel(back.a, coe.a));
    worst = std::max(worst, std::abs(back.e - coe.e));
    worst = std::max(worst, std::abs(back.inc - coe.inc));
    worst = std::max(worst, std::abs(wrapped_diff(back.raan, coe.raan)));
    worst = std::max(worst, std::abs(wrapped_diff(back.argp + back.raan, coe.argp + coe.raan)));
    worst = std::max(worst, std::abs(wrapped_diff(back.ta - coe.ta, 0.0)));
  }
  CHECK(worst < 1e-10);
}
