#include <cmath>

#include "cyclecert/builtin_systems.hpp"
#include "cyclecert/degree.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cyclecert;

namespace {

const ClosedCurve& unit_circle() {
  static const ClosedCurve c = ClosedCurve::circle(Vec2(0, 0), 1.0);
  return c;
}

// Closed-form averaged field of the built-in forced oscillator with
// b = c = omega = 1 (integral form, factor 2*pi).
Vec2 duffing_fbar(const Vec2& v) {
  return 2.0 * M_PI * Vec2(v.y(), -v.x() * v.x() * v.x() - v.y());
}

}  // namespace

TEST_SUITE("degree") {

TEST_CASE("winding numbers of reference fields") {
  const auto identity = [](const Vec2& v) { return v; };
  const auto reflection = [](const Vec2& v) { return Vec2(v.x(), -v.y()); };
  const auto squaring = [](const Vec2& v) {
    return Vec2(v.x() * v.x() - v.y() * v.y(), 2.0 * v.x() * v.y());
  };
  const auto rotation = [](const Vec2& v) { return Vec2(-v.y(), v.x()); };

  CHECK(winding_number(identity, unit_circle()).value == 1);
  CHECK(winding_number(reflection, unit_circle()).value == -1);
  CHECK(winding_number(squaring, unit_circle()).value == 2);
  CHECK(winding_number(rotation, unit_circle()).value == 1);
}

TEST_CASE("scaling a field never changes the winding number") {
  const auto squaring = [](const Vec2& v) {
    return Vec2(v.x() * v.x() - v.y() * v.y(), 2.0 * v.x() * v.y());
  };
  for (double c : {0.5, 3.0, -2.0}) {
    const auto scaled = [&](const Vec2& v) { return (c * squaring(v)).eval(); };
    CHECK(winding_number(scaled, unit_circle()).value == 2);
  }
}

TEST_CASE("reversing the curve negates the winding number") {
  const auto identity = [](const Vec2& v) { return v; };
  CHECK(winding_number(identity, unit_circle()).value == 1);
  CHECK(winding_number(identity, unit_circle().reversed()).value == -1);
  CHECK_FALSE(unit_circle().reversed().counterclockwise());
}

TEST_CASE("degree adds up over isolated zeros") {
  const auto field = [](const Vec2& v) {
    return Vec2(v.x() * v.x() - 1.0, v.y());
  };
  CHECK(poincare_index(field, Vec2(1.0, 0.0), 0.5).value == 1);
  CHECK(poincare_index(field, Vec2(-1.0, 0.0), 0.5).value == -1);
  CHECK(winding_number(field, ClosedCurve::circle(Vec2(0, 0), 3.0)).value ==
        0);
}

TEST_CASE("poincare_index reference values") {
  const auto constant = [](const Vec2&) { return Vec2(1.0, 0.0); };
  CHECK(poincare_index(constant, Vec2(0.3, -0.8), 1.0).value == 0);
  const auto minus = [](const Vec2& v) { return (-v).eval(); };
  CHECK(poincare_index(minus, Vec2(0, 0), 1.0).value == 1);
}

TEST_CASE("negated averaged field of the forced oscillator has index 1") {
  // Closed form at two radii, then the quadrature route.
  const auto closed = [](const Vec2& v) { return (-duffing_fbar(v)).eval(); };
  CHECK(poincare_index(closed, Vec2(0, 0), 0.5).value == 1);
  CHECK(poincare_index(closed, Vec2(0, 0), 2.0).value == 1);

  const PerturbedSystem duffing = make_system("duffing-ex1", {});
  const auto quad = [&](const Vec2& v) {
    return (-averaging_function(duffing, v)).eval();
  };
  const DegreeReport report = poincare_index(quad, Vec2(0, 0), 0.5);
  CHECK(report.value == 1);
  CHECK(report.max_angle_step < M_PI / 2.0);
  CHECK(report.min_field_norm > 0.0);
}

TEST_CASE("certified reports carry the angle bound and a nonzero field") {
  const auto squaring = [](const Vec2& v) {
    return Vec2(v.x() * v.x() - v.y() * v.y(), 2.0 * v.x() * v.y());
  };
  const DegreeReport r = winding_number(squaring, unit_circle());
  CHECK(r.max_angle_step < M_PI / 2.0);
  CHECK(r.min_field_norm > 0.0);
}

TEST_CASE("refinement: coarse curves are bisected until certified") {
  const auto squaring = [](const Vec2& v) {
    return Vec2(v.x() * v.x() - v.y() * v.y(), 2.0 * v.x() * v.y());
  };
  // On an 8-gon the argument-doubling field steps by exactly pi/2.
  const DegreeReport r =
      winding_number(squaring, ClosedCurve::circle(Vec2(0, 0), 1.0, 8));
  CHECK(r.value == 2);
  CHECK(r.refinement_levels >= 1);
}

TEST_CASE("doubling the initial vertex count never changes the value") {
  const auto squaring = [](const Vec2& v) {
    return Vec2(v.x() * v.x() - v.y() * v.y(), 2.0 * v.x() * v.y());
  };
  const int v64 =
      winding_number(squaring, ClosedCurve::circle(Vec2(0, 0), 1.0, 64)).value;
  const int v128 =
      winding_number(squaring, ClosedCurve::circle(Vec2(0, 0), 1.0, 128))
          .value;
  CHECK(v64 == v128);

  const auto closed = [](const Vec2& v) { return (-duffing_fbar(v)).eval(); };
  CHECK(winding_number(closed, ClosedCurve::circle(Vec2(0, 0), 0.5, 64))
            .value ==
        winding_number(closed, ClosedCurve::circle(Vec2(0, 0), 0.5, 128))
            .value);
}

TEST_CASE("curve validation") {
  const std::vector<Vec2> few{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK_THROWS_AS((ClosedCurve{few}), InvalidParams);

  // Figure-eight style vertex order: segments cross.
  const std::vector<Vec2> twisted{{0, 0},      {1, 0},     {1, 1},
                                  {0.5, -0.5}, {0, 1},     {-0.5, 0.5},
                                  {-1, 0},     {-0.5, -0.5}};
  CHECK_THROWS_AS((ClosedCurve{twisted}), InvalidParams);

  CHECK(unit_circle().counterclockwise());
  CHECK(unit_circle().signed_area() > 0.0);
  CHECK_THROWS_AS(ClosedCurve::circle(Vec2(0, 0), -1.0), InvalidParams);
}

TEST_CASE("a zero on the curve is rejected") {
  const auto identity = [](const Vec2& v) { return v; };
  // This circle passes through the origin where the field vanishes.
  CHECK_THROWS_AS(
      winding_number(identity, ClosedCurve::circle(Vec2(1.0, 0.0), 1.0)),
      ZeroOnBoundary);
}

TEST_CASE("poincare_index shrinks the radius past a boundary zero") {
  const auto field = [](const Vec2& v) {
    return Vec2(v.x() * v.x() - 1.0, v.y());
  };
  // Radius 1 around the origin passes through the zero (1,0); halving
  // moves the circle off it and the origin encloses no zero at all.
  CHECK(poincare_index(field, Vec2(0, 0), 1.0).value == 0);
}

TEST_CASE("a jump field exhausts refinement") {
  const auto jump = [](const Vec2& v) {
    return v.y() >= 0.0 ? Vec2(1.0, 0.0) : Vec2(-1.0, 0.0);
  };
  CHECK_THROWS_AS(winding_number(jump, unit_circle()), RefinementExhausted);
}

TEST_CASE("isolated-zero certificate: forced oscillator at defaults") {
  const PerturbedSystem duffing = make_system("duffing-ex1", {});
  const Rect region{Vec2(-1, -1), Vec2(1, 1)};
  const TheoremVerdict verdict =
      check_theorem1(duffing, Vec2(0, 0), region);
  CHECK(verdict.theorem == 1);
  REQUIRE(verdict.hypotheses.size() == 4);
  for (const Hypothesis& h : verdict.hypotheses) CHECK(h.holds);
  CHECK(verdict.predicted());
  CHECK_FALSE(verdict.approach_side.has_value());
  // The decisive index evidence is the integer 1.
  CHECK(verdict.hypotheses[3].evidence == 1.0);
}

TEST_CASE("isolated-zero certificate: positive divergence blocks it") {
  // Same forcing but with the damping sign flipped (c = -1); built by
  // hand because the catalog enforces positive damping.
  const AutonomousSystem zero{[](const Vec2&) { return Vec2::Zero().eval(); },
                              [](const Vec2&) { return Mat2::Zero().eval(); },
                              [](const Vec2&) { return 0.0; }};
  const PerturbedSystem antidamped{
      zero,
      [](double t, const Vec2& x, double eps) {
        return Vec2(x.y(), x.y() - eps * x.x() -
                               x.x() * x.x() * x.x() + std::cos(t));
      },
      nullptr,
      [](double, const Vec2&, double) { return 1.0; },
      2.0 * M_PI,
      0.1};
  const TheoremVerdict verdict =
      check_theorem1(antidamped, Vec2(0, 0), Rect{Vec2(-1, -1), Vec2(1, 1)});
  CHECK_FALSE(verdict.predicted());
  CHECK(verdict.hypotheses[1].name == "divergence_negative");
  CHECK_FALSE(verdict.hypotheses[1].holds);
  CHECK(verdict.hypotheses[1].evidence > 0.0);
}

TEST_CASE("isolated-zero certificate: vanishing forcing blocks the index") {
  const AutonomousSystem zero{[](const Vec2&) { return Vec2::Zero().eval(); },
                              [](const Vec2&) { return Mat2::Zero().eval(); },
                              [](const Vec2&) { return 0.0; }};
  const PerturbedSystem unforced{
      zero,
      [](double, const Vec2&, double) { return Vec2::Zero().eval(); },
      nullptr,
      [](double, const Vec2&, double) { return 0.0; },
      2.0 * M_PI,
      0.1};
  const TheoremVerdict verdict =
      check_theorem1(unforced, Vec2(0, 0), Rect{Vec2(-1, -1), Vec2(1, 1)});
  CHECK_FALSE(verdict.predicted());
  CHECK(verdict.hypotheses[3].name ==
        "index_of_negated_averaged_field_positive");
  CHECK_FALSE(verdict.hypotheses[3].holds);
}

TEST_CASE("cycle certificate: degenerate resonance, p = 2") {
  const PerturbedSystem sys =
      make_system("degenerate-cycle-ex2", {{"p", 2.0}});
  const Cycle cycle =
      make_cycle(sys.base, Vec2(0.0, std::sqrt(2.0)), 2.0 * M_PI);
  const TheoremVerdict verdict = check_theorem2(sys, cycle, 0.3);
  CHECK(verdict.theorem == 2);
  REQUIRE(verdict.hypotheses.size() == 4);
  for (const Hypothesis& h : verdict.hypotheses) CHECK(h.holds);
  CHECK(verdict.predicted());
  // The degree evidence must be 0 or 2; for this forcing it is 0, so the
  // perturbed orbits should approach from outside.
  const double d = verdict.hypotheses[3].evidence;
  CHECK((d == 0.0 || d == 2.0));
  CHECK(d == 0.0);
  REQUIRE(verdict.approach_side.has_value());
  CHECK(*verdict.approach_side == ApproachSide::outside);
}

TEST_CASE("cycle certificate: isochronous neighborhoods are rejected") {
  const AutonomousSystem harmonic{
      [](const Vec2& x) { return Vec2(x.y(), -x.x()); },
      [](const Vec2&) { return (Mat2() << 0, 1, -1, 0).finished(); },
      [](const Vec2&) { return 0.0; }};
  const PerturbedSystem sys{
      harmonic,
      [](double t, const Vec2&, double) { return Vec2(0.0, std::sin(t)); },
      nullptr,
      [](double, const Vec2&, double) { return 0.0; },
      2.0 * M_PI,
      0.2};
  const Cycle cycle = make_cycle(harmonic, Vec2(1.0, 0.0), 2.0 * M_PI);
  const TheoremVerdict verdict = check_theorem2(sys, cycle, 0.3);
  CHECK_FALSE(verdict.predicted());
  CHECK(verdict.hypotheses[1].name == "no_T_periodic_solutions_off_cycle");
  CHECK_FALSE(verdict.hypotheses[1].holds);
}

TEST_CASE("cycle certificate: vanishing forcing leaves no degree") {
  const PerturbedSystem base =
      make_system("degenerate-cycle-ex2", {{"p", 2.0}});
  const PerturbedSystem unforced{
      base.base,
      [](double, const Vec2&, double) { return Vec2::Zero().eval(); },
      nullptr,
      [](double, const Vec2&, double) { return 0.0; },
      2.0 * M_PI,
      0.2};
  const Cycle cycle =
      make_cycle(base.base, Vec2(0.0, std::sqrt(2.0)), 2.0 * M_PI);
  const TheoremVerdict verdict = check_theorem2(unforced, cycle, 0.3);
  CHECK_FALSE(verdict.predicted());
  CHECK_FALSE(verdict.hypotheses[3].holds);
  CHECK_FALSE(verdict.approach_side.has_value());
}

}  // TEST_SUITE
