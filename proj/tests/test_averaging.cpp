#include <cmath>

#include "cyclecert/averaging.hpp"
#include "cyclecert/builtin_systems.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cyclecert;

namespace {

PerturbedSystem cycle_system(int p) {
  return make_system("degenerate-cycle-ex2", {{"p", static_cast<double>(p)}});
}

}  // namespace

TEST_SUITE("averaging") {

TEST_CASE("forced oscillator with trivial base flow: closed form") {
  const PerturbedSystem duffing = make_system("duffing-ex1", {});
  // With f == 0 the flow is the identity, so fbar(v) is the plain time
  // integral of g(., v, 0); for this forcing that is
  // 2*pi * (v2, -c*v2 - b*v1^3) (the cosine drive averages out).
  const Vec2 a = averaging_function(duffing, Vec2(1.0, 0.0));
  CHECK((a - 2.0 * M_PI * Vec2(0.0, -1.0)).norm() < 1e-8);
  const Vec2 b = averaging_function(duffing, Vec2(0.5, -0.3));
  CHECK((b - 2.0 * M_PI * Vec2(-0.3, 0.3 - 0.125)).norm() < 1e-8);
}

TEST_CASE("zero forcing averages to exactly zero") {
  const AutonomousSystem harmonic{
      [](const Vec2& x) { return Vec2(x.y(), -x.x()); },
      [](const Vec2&) { return (Mat2() << 0, 1, -1, 0).finished(); },
      [](const Vec2&) { return 0.0; }};
  const PerturbedSystem sys{
      harmonic,
      [](double, const Vec2&, double) { return Vec2::Zero().eval(); },
      nullptr,
      nullptr,
      2.0 * M_PI,
      0.2};
  CHECK(averaging_function(sys, Vec2(0.7, -1.1)).norm() == 0.0);
}

TEST_CASE("constant forcing on a full rotation averages out") {
  const AutonomousSystem harmonic{
      [](const Vec2& x) { return Vec2(x.y(), -x.x()); }, nullptr, nullptr};
  const PerturbedSystem sys{
      harmonic,
      [](double, const Vec2&, double) { return Vec2(0.0, 1.0); },
      nullptr,
      nullptr,
      2.0 * M_PI,
      0.2};
  // Y(tau)^{-1} is a rotation matrix; integrated over a full period it
  // annihilates any constant vector.
  CHECK(averaging_function(sys, Vec2(2.0, 0.5)).norm() < 1e-9);
}

TEST_CASE("trivial base flow reduces to a scalar quadrature oracle") {
  const PerturbedSystem duffing = make_system("duffing-ex1", {});
  const Vec2 v(0.7, 0.2);
  const Vec2 got = averaging_function(duffing, v);
  const double T = duffing.period;
  const double c0 = testutil::simpson(
      [&](double t) { return duffing.g(t, v, 0.0).x(); }, 0.0, T, 2048);
  const double c1 = testutil::simpson(
      [&](double t) { return duffing.g(t, v, 0.0).y(); }, 0.0, T, 2048);
  CHECK((got - Vec2(c0, c1)).norm() < 1e-10);
}

TEST_CASE("degenerate-cycle field: frozen reference values") {
  const PerturbedSystem p1 = cycle_system(1);
  const PerturbedSystem p2 = cycle_system(2);
  const double r = std::sqrt(2.0);

  CHECK((averaging_function(p1, Vec2(1.0, 0.5)) -
         Vec2(-1.36015329, -0.90030583))
            .norm() < 1e-6);
  CHECK((averaging_function(p1, Vec2(0.0, r)) - Vec2(-M_PI / 2.0, 0.0))
            .norm() < 1e-6);
  CHECK((averaging_function(p2, Vec2(1.0, 0.5)) -
         Vec2(-6.33297695, 6.31556724))
            .norm() < 1e-6);
  CHECK((averaging_function(p2, Vec2(1.3, -0.4)) -
         Vec2(-2.40989690, 2.29190103))
            .norm() < 1e-6);
  CHECK((averaging_function(p2, Vec2(0.0, r)) - Vec2(-M_PI, 0.0)).norm() <
        1e-6);
}

TEST_CASE("on-cycle value is independent of the starting phase (p = 2)") {
  const PerturbedSystem sys = cycle_system(2);
  const Vec2 v0(0.0, std::sqrt(2.0));
  const Vec2 v1 = flow(sys.base, 0.9, 0.0, v0);
  const Vec2 a = averaging_function(sys, v0);
  const Vec2 b = averaging_function(sys, v1);
  CHECK((a - b).norm() <= 1e-7);
}

TEST_CASE("grid sampling matches pointwise calls bit for bit") {
  const PerturbedSystem duffing = make_system("duffing-ex1", {});
  const Rect region{Vec2(-1.0, -1.0), Vec2(1.0, 1.0)};
  const AveragedField field = averaging_on_grid(duffing, region, 3);
  REQUIRE(field.points.size() == 9);
  REQUIRE(field.values.size() == 9);
  CHECK((field.points[0] - Vec2(-1.0, -1.0)).norm() == 0.0);
  CHECK((field.points[4] - Vec2(0.0, 0.0)).norm() == 0.0);
  CHECK((field.points[8] - Vec2(1.0, 1.0)).norm() == 0.0);
  for (std::size_t k = 0; k < field.points.size(); ++k) {
    const Vec2 direct = averaging_function(duffing, field.points[k]);
    CHECK((field.values[k] - direct).norm() == 0.0);
  }
}

TEST_CASE("grid of zero forcing is identically zero") {
  const AutonomousSystem harmonic{
      [](const Vec2& x) { return Vec2(x.y(), -x.x()); }, nullptr, nullptr};
  const PerturbedSystem sys{
      harmonic,
      [](double, const Vec2&, double) { return Vec2::Zero().eval(); },
      nullptr,
      nullptr,
      2.0 * M_PI,
      0.2};
  const AveragedField field =
      averaging_on_grid(sys, Rect{Vec2(-1, -1), Vec2(1, 1)}, 3);
  for (const Vec2& value : field.values) CHECK(value.norm() == 0.0);
}

TEST_CASE("second component changes sign across v2 = -v1^3") {
  const PerturbedSystem duffing = make_system("duffing-ex1", {});
  for (double v1 : {-0.8, 0.3, 0.9}) {
    const double crest = -v1 * v1 * v1;
    const Vec2 above = averaging_function(duffing, Vec2(v1, crest + 0.2));
    const Vec2 below = averaging_function(duffing, Vec2(v1, crest - 0.2));
    CHECK(above.y() < 0.0);
    CHECK(below.y() > 0.0);
  }
}

TEST_CASE("integral and mean forms vanish together at a zero") {
  const PerturbedSystem duffing = make_system("duffing-ex1", {});
  const Vec2 at_zero = averaging_function(duffing, Vec2(0.0, 0.0));
  CHECK(at_zero.norm() < 1e-12);
  CHECK((at_zero / duffing.period).norm() < 1e-12);
}

TEST_CASE("configuration validation") {
  const PerturbedSystem duffing = make_system("duffing-ex1", {});
  AveragingConfig cfg;
  cfg.quad_nodes = 14;
  CHECK_THROWS_AS(averaging_function(duffing, Vec2(1, 0), cfg), InvalidParams);
  cfg.quad_nodes = 17;
  CHECK_THROWS_AS(averaging_function(duffing, Vec2(1, 0), cfg), InvalidParams);
}

TEST_CASE("strong contraction trips the invertibility guard") {
  const AutonomousSystem contracting{
      [](const Vec2& x) { return (-50.0 * x).eval(); }, nullptr, nullptr};
  const PerturbedSystem sys{
      contracting,
      [](double, const Vec2&, double) { return Vec2(0.0, 1.0); },
      nullptr,
      nullptr,
      2.0 * M_PI,
      0.2};
  // det Y(tau) = exp(-100 tau) drops below 1e-12 well inside one period.
  CHECK_THROWS_AS(averaging_function(sys, Vec2(0.1, 0.1)),
                  SingularVariational);
}

}  // TEST_SUITE
