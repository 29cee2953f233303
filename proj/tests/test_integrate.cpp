#include <doctest.h>

#include <cmath>

#include "cyclecert/integrate.hpp"
#include "test_util.hpp"

using namespace cyclecert;

TEST_SUITE("integrate") {
  const auto harmonic = [](double, const Vec2& x) { return Vec2(x(1), -x(0)); };

  TEST_CASE("rotation field integrates to the closed-form rotation") {
    const Tolerances tol;
    const Vec2 v(0.8, -0.3);
    for (const double t : {0.5, 2.0, M_PI, 7.0}) {
      const Vec2 got = integrate<2>(harmonic, 0.0, v, t, tol);
      const Vec2 want = testutil::rot(-t) * v;
      CHECK((got - want).norm() < 1e-9);
    }
  }

  TEST_CASE("backward integration inverts forward integration") {
    const Tolerances tol;
    const Vec2 v(1.1, 0.4);
    const Vec2 fwd = integrate<2>(harmonic, 0.0, v, 3.7, tol);
    const Vec2 back = integrate<2>(harmonic, 3.7, fwd, 0.0, tol);
    CHECK((back - v).norm() < 1e-9);
  }

  TEST_CASE("dense output interpolates step nodes exactly") {
    const Tolerances tol;
    DenseSolution<2> dense;
    integrate<2>(harmonic, 0.0, Vec2(1.0, 0.0), 6.0, tol, &dense);
    REQUIRE(dense.size() > 3);
    for (const auto& step : dense.steps()) {
      // start node: the interpolation parameter is exactly 0
      CHECK((step.eval(step.t0) - step.r1).norm() == 0.0);
      // end node: t0 + h rounds, so allow one ulp of parameter error
      const Vec2 end = step.eval(step.t0 + step.h);
      CHECK((end - (step.r1 + step.r2)).norm() < 1e-14);
    }
    // consecutive steps agree at the shared node
    const auto& steps = dense.steps();
    for (std::size_t i = 0; i + 1 < steps.size(); ++i)
      CHECK((steps[i].r1 + steps[i].r2 - steps[i + 1].r1).norm() == 0.0);
  }

  TEST_CASE("dense output tracks the true solution between nodes") {
    const Tolerances tol;
    DenseSolution<2> dense;
    integrate<2>(harmonic, 0.0, Vec2(1.0, 0.0), 2.0 * M_PI, tol, &dense);
    for (int i = 0; i <= 200; ++i) {
      const double t = 2.0 * M_PI * i / 200.0;
      const Vec2 want = testutil::rot(-t) * Vec2(1.0, 0.0);
      CHECK((dense.eval(t) - want).norm() < 1e-8);
    }
  }

  TEST_CASE("dense output works backward in time") {
    const Tolerances tol;
    DenseSolution<2> dense;
    integrate<2>(harmonic, 1.0, Vec2(0.2, 0.9), -2.5, tol, &dense);
    for (int i = 0; i <= 50; ++i) {
      const double t = 1.0 - 3.5 * i / 50.0;
      const Vec2 want = testutil::rot(-(t - 1.0)) * Vec2(0.2, 0.9);
      CHECK((dense.eval(t) - want).norm() < 1e-8);
    }
  }

  TEST_CASE("degenerate span returns the initial state") {
    const Tolerances tol;
    DenseSolution<2> dense;
    const Vec2 v(0.3, -0.7);
    CHECK((integrate<2>(harmonic, 1.5, v, 1.5, tol, &dense) - v).norm() == 0.0);
    CHECK((dense.eval(1.5) - v).norm() == 0.0);
  }

  TEST_CASE("NaN from the field raises NonFiniteField") {
    const auto bad = [](double, const Vec2&) {
      return Vec2(std::nan(""), 0.0);
    };
    CHECK_THROWS_AS(integrate<2>(bad, 0.0, Vec2(0, 0), 1.0, Tolerances{}),
                    NonFiniteField);
  }

  TEST_CASE("non-smooth sliding field exhausts the step control") {
    // discontinuous switch: solutions slide along x1 = 1, the local error
    // estimate stays O(1) and the step collapses
    const auto sliding = [](double, const Vec2& x) {
      return Vec2(x(0) < 1.0 ? 1.0 : -1.0, 0.0);
    };
    CHECK_THROWS_AS(integrate<2>(sliding, 0.0, Vec2(0, 0), 3.0, Tolerances{}),
                    StepSizeUnderflow);
  }

  TEST_CASE("tolerances control the global error") {
    Tolerances loose;
    loose.abs_tol = loose.rel_tol = 1e-6;
    Tolerances tight;
    tight.abs_tol = tight.rel_tol = 1e-12;
    const Vec2 v(1.0, 0.0);
    const Vec2 want = testutil::rot(-20.0) * v;
    const double err_loose =
        (integrate<2>(harmonic, 0.0, v, 20.0, loose) - want).norm();
    const double err_tight =
        (integrate<2>(harmonic, 0.0, v, 20.0, tight) - want).norm();
    CHECK(err_tight < err_loose);
    CHECK(err_tight < 1e-10);
  }
}
