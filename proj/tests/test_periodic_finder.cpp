#include <cmath>
#include <vector>

#include "cyclecert/builtin_systems.hpp"
#include "cyclecert/periodic_finder.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cyclecert;

namespace {

PerturbedSystem duffing() { return make_system("duffing-ex1"); }

PerturbedSystem cycle_system(int p) {
  return make_system("degenerate-cycle-ex2", {{"p", static_cast<double>(p)}});
}

/// Conveyor belt: the first component always advances, so the time-2pi
/// map has no fixed point while DP - I stays generically invertible.
PerturbedSystem conveyor() {
  PerturbedSystem sys;
  sys.base.f = [](const Vec2&) { return Vec2::Zero().eval(); };
  sys.base.jac_f = [](const Vec2&) { return Mat2::Zero().eval(); };
  sys.base.div_f = [](const Vec2&) { return 0.0; };
  sys.g = [](double, const Vec2& x, double) {
    return Vec2((std::cos(5.0 * x.x()) + 1.2) / (2.0 * M_PI),
                -x.y() / (2.0 * M_PI));
  };
  sys.jac_g = nullptr;
  sys.div_g = nullptr;
  sys.period = 2.0 * M_PI;
  sys.eps_max = 1.0;
  return sys;
}

}  // namespace

TEST_SUITE("periodic_finder") {

TEST_CASE("frozen flow at eps = 0 fixes every point") {
  const PerturbedSystem sys = duffing();
  for (const Vec2& v : {Vec2(0.3, -0.7), Vec2(1.2, 0.4), Vec2(0.0, 0.0)}) {
    CHECK((stroboscopic_map(sys, 0.0, v) - v).norm() == 0.0);
  }
}

TEST_CASE("unperturbed cycle points are period-map fixed points") {
  const PerturbedSystem sys = cycle_system(2);
  const Vec2 v(0.0, std::sqrt(2.0));
  CHECK((stroboscopic_map(sys, 0.0, v) - v).norm() < 1e-8);
  const Vec2 w = std::sqrt(2.0) * Vec2(std::sin(1.0), std::cos(1.0));
  CHECK((stroboscopic_map(sys, 0.0, w) - w).norm() < 1e-8);
}

TEST_CASE("map Jacobian agrees with finite differences") {
  const PerturbedSystem sys = duffing();
  const Vec2 v(0.2, -0.4);
  const double eps = 0.08;
  const auto [mapped, jac] = stroboscopic_map_with_jacobian(sys, eps, v);
  CHECK((mapped - stroboscopic_map(sys, eps, v)).norm() < 1e-10);
  const double h = 1e-6;
  Mat2 fd;
  for (int j = 0; j < 2; ++j) {
    Vec2 lo = v, hi = v;
    lo(j) -= h;
    hi(j) += h;
    fd.col(j) =
        (stroboscopic_map(sys, eps, hi) - stroboscopic_map(sys, eps, lo)) /
        (2.0 * h);
  }
  CHECK((jac - fd).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("determinant of the map Jacobian obeys the divergence identity") {
  // det DP = exp(integral of the divergence along the trajectory).
  const PerturbedSystem d = duffing();
  const double eps_d = 0.07;
  const auto [xd, jd] = stroboscopic_map_with_jacobian(d, eps_d, Vec2(0.3, 0.8));
  const double expected_d = std::exp(-eps_d * 1.0 * 2.0 * M_PI);
  CHECK(std::abs(jd.determinant() - expected_d) < 1e-6 * expected_d);

  const PerturbedSystem c = cycle_system(2);
  const double eps_c = 0.13;
  const Vec2 v(1.0, 0.5);
  const auto [xc, jc] = stroboscopic_map_with_jacobian(c, eps_c, v);
  // divergence of the full field is -eps^2, independent of x.
  const double expected_c = std::exp(-eps_c * eps_c * 2.0 * M_PI);
  CHECK(std::abs(jc.determinant() - expected_c) < 1e-6 * expected_c);
}

TEST_CASE("Newton shooting reproduces the Duffing fixed points") {
  const PerturbedSystem sys = duffing();
  const FloquetData r1 = find_periodic(sys, 0.1, Vec2(0.0, 0.0));
  CHECK(std::abs(r1.fixed_point.x() - (-0.009910711948)) < 1e-5);
  CHECK(std::abs(r1.fixed_point.y() - 0.009920642397) < 1e-5);
  CHECK(r1.residual <= 1e-9 * (1.0 + r1.fixed_point.norm()));
  CHECK(std::abs(std::abs(r1.multipliers.first) - 0.93152404) < 1e-6);
  CHECK(std::abs(std::abs(r1.multipliers.second) - 0.57270459) < 1e-6);
  CHECK(r1.stable);

  const FloquetData r2 = find_periodic(sys, 0.05, Vec2(0.0, 0.0));
  CHECK(std::abs(r2.fixed_point.x() - (-0.002494075822)) < 1e-5);
  CHECK(std::abs(r2.fixed_point.y() - 0.002494387658) < 1e-5);
  CHECK(r2.stable);
}

TEST_CASE("Newton shooting locates the degenerate-resonance response") {
  const PerturbedSystem sys = cycle_system(2);
  const FloquetData r = find_periodic(sys, 0.1, Vec2(0.0, std::sqrt(2.0)));
  CHECK(std::abs(r.fixed_point.x() - (-0.23326838)) < 1e-5);
  CHECK(std::abs(r.fixed_point.y() - 1.49277795) < 1e-5);
  CHECK(r.residual <= 1e-9 * (1.0 + r.fixed_point.norm()));
  // Complex multiplier pair of modulus exp(-pi eps^2).
  const double modulus = std::exp(-M_PI * 0.1 * 0.1);
  CHECK(std::abs(std::abs(r.multipliers.first) - modulus) < 1e-6);
  CHECK(std::abs(std::abs(r.multipliers.second) - modulus) < 1e-6);
  CHECK(r.stable);
}

TEST_CASE("a start at an exact fixed point converges immediately") {
  // At eps = 0 the Duffing field vanishes identically, so every point is
  // an exact fixed point of the frozen flow.
  const FloquetData r = find_periodic(duffing(), 0.0, Vec2(0.4, -0.2));
  CHECK(r.residual <= 1e-12);
  CHECK(std::abs(r.multipliers.first - Complex(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(r.multipliers.second - Complex(1.0, 0.0)) < 1e-12);
  CHECK_FALSE(r.stable);
}

TEST_CASE("stability is confirmed by probes from perturbed starts") {
  const auto confirm = [](const PerturbedSystem& sys, const FloquetData& data) {
    REQUIRE(data.stable);
    for (const Vec2& dir :
         {Vec2(1.0, 0.0), Vec2(-1.0, 0.0), Vec2(0.0, 1.0), Vec2(0.0, -1.0)}) {
      const AttractorProbe probe = attractor_probe(
          sys, data.eps, data.fixed_point + 1e-3 * dir, 200);
      CHECK(probe.converged);
      CHECK((probe.limit_point - data.fixed_point).norm() < 1e-3);
    }
  };
  const PerturbedSystem d = duffing();
  confirm(d, find_periodic(d, 0.05, Vec2(0.0, 0.0)));
  const PerturbedSystem c = cycle_system(2);
  confirm(c, find_periodic(c, 0.2, Vec2(0.0, std::sqrt(2.0))));
}

TEST_CASE("probe converges onto the forced Duffing attractor") {
  const AttractorProbe probe =
      attractor_probe(duffing(), 0.05, Vec2(0.5, 0.5), 200);
  CHECK(probe.converged);
  // Contraction is slow (dominant multiplier ~0.97 per period); 200
  // periods close most but not all of the distance to the fixed point.
  CHECK((probe.limit_point - Vec2(-0.002494075822, 0.002494387658)).norm() <
        1e-2);
  CHECK(probe.step_sizes.back() < 0.1 * probe.step_sizes.front());
}

TEST_CASE("probe reports quasi-periodic drift as non-converged") {
  const AttractorProbe probe =
      attractor_probe(cycle_system(2), 0.0, Vec2(0.0, 1.0), 50);
  CHECK_FALSE(probe.converged);
}

TEST_CASE("probe contracts to the origin on the pure contraction field") {
  const AttractorProbe probe =
      attractor_probe(make_system("linear-contract"), 0.5, Vec2(1.0, 1.0), 30);
  CHECK(probe.converged);
  CHECK(probe.limit_point.norm() < 1e-8);
}

TEST_CASE("point-mode continuation approaches the bifurcation point") {
  const ContinuationResult result =
      continuation(duffing(), {0.1, 0.05, 0.025}, Vec2(0.0, 0.0),
                   ContinuationReference(Vec2(0.0, 0.0)));
  CHECK(result.complete);
  REQUIRE(result.rows.size() == 3);
  for (const ContinuationRow& row : result.rows) {
    CHECK(row.floquet.stable);
    CHECK_FALSE(row.side.has_value());
  }
  CHECK(std::abs(result.rows[0].dist_to_generator - 1.40e-2) < 1e-3);
  CHECK(result.rows[1].dist_to_generator < result.rows[0].dist_to_generator);
  CHECK(result.rows[2].dist_to_generator < result.rows[1].dist_to_generator);
  CHECK(std::abs(result.rows[2].fixed_point().x() - (-0.000624619374)) < 1e-5);
}

TEST_CASE("cycle-mode continuation approaches the cycle from one side") {
  const PerturbedSystem sys = cycle_system(2);
  const Cycle cycle =
      make_cycle(sys.base, Vec2(0.0, std::sqrt(2.0)), 2.0 * M_PI);
  const ContinuationResult result =
      continuation(sys, {0.2, 0.1, 0.05}, Vec2(0.0, std::sqrt(2.0)),
                   ContinuationReference(cycle));
  CHECK(result.complete);
  REQUIRE(result.rows.size() == 3);
  const std::vector<double> expected = {0.20660221, 0.14453016, 0.10018918};
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(result.rows[k].floquet.stable);
    CHECK(std::abs(result.rows[k].dist_to_generator - expected[k]) < 1e-3);
    REQUIRE(result.rows[k].side.has_value());
    CHECK(*result.rows[k].side == ApproachSide::outside);
  }
  CHECK(result.rows[1].dist_to_generator < result.rows[0].dist_to_generator);
  CHECK(result.rows[2].dist_to_generator < result.rows[1].dist_to_generator);
}

TEST_CASE("warm starts are schedule-refinement consistent") {
  const PerturbedSystem sys = duffing();
  const ContinuationReference ref{Vec2(0.0, 0.0)};
  const ContinuationResult coarse =
      continuation(sys, {0.1, 0.05}, Vec2(0.0, 0.0), ref);
  const ContinuationResult fine =
      continuation(sys, {0.1, 0.075, 0.05}, Vec2(0.0, 0.0), ref);
  REQUIRE(coarse.rows.size() == 2);
  REQUIRE(fine.rows.size() == 3);
  CHECK((coarse.rows[0].fixed_point() - fine.rows[0].fixed_point()).norm() <
        1e-6);
  CHECK((coarse.rows[1].fixed_point() - fine.rows[2].fixed_point()).norm() <
        1e-6);
}

TEST_CASE("continuation truncates at the first failing row") {
  // At eps ~ 1e-7 the degenerate-resonance period map is tangent to the
  // identity and Newton's Jacobian is singular.
  const ContinuationResult result =
      continuation(duffing(), {0.1, 0.05, 1e-7}, Vec2(0.0, 0.0),
                   ContinuationReference(Vec2(0.0, 0.0)));
  CHECK_FALSE(result.complete);
  CHECK(result.rows.size() == 2);
  CHECK(result.failure.find("SingularJacobian") != std::string::npos);
}

TEST_CASE("single-entry schedule yields a single row") {
  const ContinuationResult result =
      continuation(duffing(), {0.1}, Vec2(0.0, 0.0),
                   ContinuationReference(Vec2(0.0, 0.0)));
  CHECK(result.complete);
  REQUIRE(result.rows.size() == 1);
  const FloquetData direct = find_periodic(duffing(), 0.1, Vec2(0.0, 0.0));
  CHECK((result.rows[0].fixed_point() - direct.fixed_point).norm() < 1e-10);
}

TEST_CASE("Newton diverges on a map without fixed points") {
  CHECK_THROWS_AS(find_periodic(conveyor(), 1.0, Vec2(0.0, 0.5)),
                  NewtonDiverged);
}

TEST_CASE("parameter validation") {
  const PerturbedSystem sys = duffing();
  CHECK_THROWS_AS(stroboscopic_map(sys, 0.2, Vec2(0.0, 0.0)), InvalidParams);
  CHECK_THROWS_AS(stroboscopic_map(sys, -0.01, Vec2(0.0, 0.0)), InvalidParams);
  CHECK_THROWS_AS(attractor_probe(sys, 0.05, Vec2(0.0, 0.0), 9), InvalidParams);
  CHECK_THROWS_AS(
      continuation(sys, {}, Vec2(0.0, 0.0), ContinuationReference(Vec2(0.0, 0.0))),
      InvalidParams);
  CHECK_THROWS_AS(continuation(sys, {0.05, 0.05}, Vec2(0.0, 0.0),
                               ContinuationReference(Vec2(0.0, 0.0))),
                  InvalidParams);
  CHECK_THROWS_AS(continuation(sys, {0.05, -0.01}, Vec2(0.0, 0.0),
                               ContinuationReference(Vec2(0.0, 0.0))),
                  InvalidParams);
}

}  // TEST_SUITE
