#include "cyclecert/orbit_tools.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cyclecert {

namespace {

constexpr double kTransversalityFloor = 1e-8;
constexpr double kCrossingResidual = 1e-10;
// Sign samples per accepted integrator step when scanning for crossings;
// guards against a step that dips across the section line and back.
constexpr int kScanSubsteps = 8;

std::string fmt(double x) { return std::to_string(x); }

}  // namespace

Section transversal_section(const AutonomousSystem& sys, const Vec2& anchor) {
  const Vec2 fv = sys.f(anchor);
  const double speed = fv.norm();
  if (speed < kTransversalityFloor) {
    throw TangentialCrossing(
        "field norm " + fmt(speed) +
        " at the requested anchor is below the transversality floor");
  }
  return Section{anchor, fv / speed};
}

double return_time(const AutonomousSystem& sys, const Vec2& v,
                   const Section& section, double t_max,
                   const Tolerances& tol) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw InvalidParams("return_time requires a finite positive t_max");
  }
  const double d0 = sys.f(v).dot(section.normal);
  if (std::abs(d0) < kTransversalityFloor) {
    throw TangentialCrossing("start velocity component along the normal is " +
                             fmt(d0) + ", below the transversality floor");
  }
  const double dir = d0 > 0.0 ? 1.0 : -1.0;

  const Trajectory traj = flow_trajectory(sys, t_max, 0.0, v, tol);
  const auto s_at = [&](double t) {
    return section.signed_distance(traj.eval(t));
  };

  // Scan for the first crossing with the same orientation as the departure:
  // signed distance moving from the far side (s * dir < 0) back through 0.
  double t_prev = 0.0;
  double s_prev = section.signed_distance(v);
  const DenseStep<2>* bracket_step = nullptr;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  for (const auto& step : traj.dense.steps()) {
    for (int k = 1; k <= kScanSubsteps && bracket_step == nullptr; ++k) {
      const double t =
          step.t0 + step.h * static_cast<double>(k) / kScanSubsteps;
      if (t > t_max) break;
      const double s = s_at(t);
      if (s_prev * dir < 0.0 && s * dir >= 0.0) {
        bracket_lo = t_prev;
        bracket_hi = t;
        bracket_step = &step;
      }
      t_prev = t;
      s_prev = s;
    }
    if (bracket_step != nullptr) break;
  }
  if (bracket_step == nullptr) {
    throw NoReturn("no same-direction section crossing within t_max = " +
                   fmt(t_max));
  }

  // Refine against the true flow, not the interpolant: short integrations
  // from the accepted step node keep the crossing time at integrator
  // accuracy (the dense interpolant alone would leave O(h^5) noise in the
  // return time).
  Tolerances fine = tol;
  fine.abs_tol = std::min(tol.abs_tol, 1e-13);
  fine.rel_tol = std::min(tol.rel_tol, 1e-13);
  const double anchor_t = bracket_step->t0;
  const Vec2 anchor_y = bracket_step->r1;
  const auto x_exact = [&](double t) {
    if (t == anchor_t) return anchor_y;
    return integrate<2>(
        [&](double, const VecN<2>& y) -> VecN<2> { return sys.f(y); },
        anchor_t, anchor_y, t, fine);
  };
  const auto s_exact = [&](double t) {
    return section.signed_distance(x_exact(t));
  };

  // The interpolant may misjudge the sign right at a bracket endpoint;
  // nudge the endpoints outward until the exact signs disagree.
  double lo = bracket_lo;
  double hi = bracket_hi;
  double s_lo = s_exact(lo);
  double s_hi = s_exact(hi);
  const double width = bracket_hi - bracket_lo;
  for (int tries = 0; tries < 3 && s_lo * dir >= 0.0 && lo > 0.0; ++tries) {
    lo = std::max(0.0, lo - width);
    s_lo = s_exact(lo);
  }
  for (int tries = 0; tries < 3 && s_hi * dir < 0.0; ++tries) {
    hi = std::min(t_max, hi + width);
    s_hi = s_exact(hi);
  }
  if (s_lo * s_hi > 0.0) {
    throw TangentialCrossing(
        "detected crossing could not be confirmed against the flow; the "
        "trajectory meets the section nearly tangentially");
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s_mid = s_exact(mid);
    if (std::abs(s_mid) <= kCrossingResidual) {
      lo = hi = mid;
      break;
    }
    if (s_lo * s_mid <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
      s_lo = s_mid;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  double t_star = std::abs(s_exact(lo)) <= std::abs(s_exact(hi)) ? lo : hi;

  // Newton polish on s(t), with s'(t) = <f(x(t)), normal>.
  for (int it = 0; it < 3; ++it) {
    const Vec2 x = x_exact(t_star);
    const double s = section.signed_distance(x);
    const double ds = sys.f(x).dot(section.normal);
    if (std::abs(s) <= 1e-14 || std::abs(ds) < kTransversalityFloor) break;
    t_star -= s / ds;
  }

  if (std::abs(s_exact(t_star)) > kCrossingResidual) {
    throw TangentialCrossing(
        "crossing refinement stalled with residual " + fmt(s_exact(t_star)) +
        "; the trajectory meets the section nearly tangentially");
  }
  const double d_star = sys.f(x_exact(t_star)).dot(section.normal);
  if (std::abs(d_star) < kTransversalityFloor) {
    throw TangentialCrossing("velocity component along the normal is " +
                             fmt(d_star) +
                             " at the located crossing, below the "
                             "transversality floor");
  }
  return t_star;
}

Vec2 Cycle::at(double t) const {
  double u = std::fmod(t, period);
  if (u < 0.0) u += period;
  return orbit.eval(u);
}

std::vector<Vec2> Cycle::sample_points(int n) const {
  if (n < 1) throw InvalidParams("sample_points requires n >= 1");
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    pts.push_back(orbit.eval(period * static_cast<double>(k) / n));
  }
  return pts;
}

Cycle make_cycle(const AutonomousSystem& sys, const Vec2& start, double period,
                 const Tolerances& tol) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw InvalidParams("make_cycle requires a finite positive period");
  }
  const Vec2 velocity = sys.f(start);
  if (velocity.norm() < kTransversalityFloor) {
    throw NotPeriodic("field norm " + fmt(velocity.norm()) +
                      " at the cycle start; the orbit would be an "
                      "equilibrium, not a cycle");
  }
  Trajectory orbit = flow_trajectory(sys, period, 0.0, start, tol);
  const double closure = (orbit.eval(period) - start).norm();
  if (closure > 1e-8 * (1.0 + start.norm())) {
    throw NotPeriodic("orbit closure error " + fmt(closure) +
                      " exceeds 1e-8 * (1 + |start|) after one period");
  }
  return Cycle{start, period, std::move(orbit), velocity};
}

namespace {

// Return time of the orbit through v(s) = base + s * along, measured on
// the section line through the probe point itself (normal fixed).
struct AmplitudeLine {
  const AutonomousSystem& sys;
  Vec2 base;
  Vec2 along;
  Vec2 normal;
  double t_max;
  const Tolerances& tol;

  Vec2 point(double s) const { return base + s * along; }
  double period(double s) const {
    return return_time(sys, point(s), Section{point(s), normal}, t_max, tol);
  }
};

}  // namespace

Cycle find_cycle(const AutonomousSystem& sys, const Vec2& seed,
                 std::optional<double> target_period, const Tolerances& tol,
                 double t_max) {
  const Section section = transversal_section(sys, seed);
  // Direction along the section line: the normal rotated by +90 degrees.
  const Vec2 along(-section.normal.y(), section.normal.x());
  const AmplitudeLine line{sys, seed, along, section.normal, t_max, tol};

  if (target_period) {
    const double target = *target_period;
    if (!(target > 0.0) || !std::isfinite(target)) {
      throw InvalidParams("find_cycle requires a finite positive target period");
    }
    const auto phi = [&](double s) { return line.period(s) - target; };

    // Expand probes around s = 0 by doubling on both sides, looking for a
    // sign change of the period mismatch. Probes where the return time is
    // undefined (equilibria swallowed, escaping orbits) close off that
    // side of the search.
    const double scale = 1.0 + seed.norm();
    struct Probe {
      double s;
      double phi;
    };
    std::vector<Probe> probes{{0.0, phi(0.0)}};
    double lo = 0.0, hi = 0.0, phi_lo = 0.0, phi_hi = 0.0;
    bool found = std::abs(probes.front().phi) <= 1e-9;
    for (int side = 0; side < 2 && !found; ++side) {
      const double sign = side == 0 ? 1.0 : -1.0;
      Probe prev = probes.front();
      for (double step = 0.05 * scale; step <= 1.0 * scale; step *= 2.0) {
        const double s = sign * step;
        double value = 0.0;
        try {
          value = phi(s);
        } catch (const Error&) {
          break;
        }
        probes.push_back({s, value});
        if (prev.phi * value <= 0.0) {
          lo = std::min(prev.s, s);
          hi = std::max(prev.s, s);
          phi_lo = prev.s <= s ? prev.phi : value;
          phi_hi = prev.s <= s ? value : prev.phi;
          found = true;
          break;
        }
        prev = {s, value};
      }
    }

    double s_star = 0.0;
    if (found && lo == hi) {
      s_star = probes.front().phi == 0.0 ? 0.0 : lo;
    } else if (found) {
      // Bisection with a secant proposal when it lands inside the bracket.
      for (int it = 0; it < 200; ++it) {
        if (std::abs(phi_lo) <= 1e-9) {
          s_star = lo;
          break;
        }
        if (std::abs(phi_hi) <= 1e-9) {
          s_star = hi;
          break;
        }
        double mid = 0.5 * (lo + hi);
        if (phi_hi != phi_lo) {
          const double secant = lo - phi_lo * (hi - lo) / (phi_hi - phi_lo);
          if (secant > lo + 0.1 * (hi - lo) && secant < hi - 0.1 * (hi - lo)) {
            mid = secant;
          }
        }
        const double phi_mid = phi(mid);
        s_star = mid;
        if (std::abs(phi_mid) <= 1e-9 ||
            hi - lo <= 1e-14 * (1.0 + std::abs(lo))) {
          break;
        }
        if (phi_lo * phi_mid <= 0.0) {
          hi = mid;
          phi_hi = phi_mid;
        } else {
          lo = mid;
          phi_lo = phi_mid;
        }
      }
    } else {
      // No sign change: the target may sit at an extremum of the period
      // function (tangent contact). Locate a critical point of the return
      // time between probes where the slope flips, then insist the period
      // there still matches the target.
      std::sort(probes.begin(), probes.end(),
                [](const Probe& a, const Probe& b) { return a.s < b.s; });
      const double hd = 1e-3 * scale;
      // Bisection on the centered period difference with half-width h;
      // returns the slope zero or NaN when the slope does not change sign.
      const auto critical_point = [&](double a, double b, double h) {
        const auto slope = [&](double s) {
          return line.period(s + h) - line.period(s - h);
        };
        double da = slope(a);
        const double db = slope(b);
        if (da * db > 0.0) {
          return std::numeric_limits<double>::quiet_NaN();
        }
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (a + b);
          const double dm = slope(mid);
          if (da * dm <= 0.0) {
            b = mid;
          } else {
            a = mid;
            da = dm;
          }
          if (b - a <= 1e-12 * scale) break;
        }
        return 0.5 * (a + b);
      };
      bool accepted = false;
      for (std::size_t i = 1; i + 1 < probes.size() && !accepted; ++i) {
        const double rise = probes[i].phi - probes[i - 1].phi;
        const double fall = probes[i + 1].phi - probes[i].phi;
        if (rise * fall >= 0.0) continue;
        const double a = probes[i - 1].s, b = probes[i + 1].s;
        double s_c = 0.0;
        try {
          // The slope zero carries an O(h^2) bias proportional to the
          // third period derivative; one Richardson step removes it.
          const double s_h = critical_point(a, b, hd);
          const double s_half = critical_point(a, b, 0.5 * hd);
          if (std::isnan(s_h) || std::isnan(s_half)) continue;
          s_c = (4.0 * s_half - s_h) / 3.0;
        } catch (const Error&) {
          continue;
        }
        if (std::abs(phi(s_c)) <= 1e-8) {
          s_star = s_c;
          accepted = true;
        }
      }
      if (!accepted) {
        throw AmplitudeRootNotBracketed(
            "no amplitude with return time " + fmt(target) +
            " along the section within |s| <= " + fmt(1.0 * scale) +
            " (no sign change of the period mismatch and no matching "
            "period extremum)");
      }
    }
    return make_cycle(sys, line.point(s_star), line.period(s_star), tol);
  }

  // No target: accept the seed when its own return orbit closes up;
  // otherwise refine the in-section displacement by a secant iteration.
  const auto displacement = [&](double s) {
    const Vec2 p = line.point(s);
    const double T = line.period(s);
    return (flow(sys, T, 0.0, p, tol) - p).dot(along);
  };
  double T0 = line.period(0.0);
  if ((flow(sys, T0, 0.0, seed, tol) - seed).norm() <=
      1e-9 * (1.0 + seed.norm())) {
    return make_cycle(sys, seed, T0, tol);
  }
  double s_a = 0.0;
  double g_a = displacement(0.0);
  double s_b = 0.01 * (1.0 + seed.norm());
  double g_b = displacement(s_b);
  for (int it = 0; it < 50; ++it) {
    if (g_b == g_a) break;
    const double s_next = s_b - g_b * (s_b - s_a) / (g_b - g_a);
    s_a = s_b;
    g_a = g_b;
    s_b = s_next;
    g_b = displacement(s_b);
    if (std::abs(g_b) <= 1e-11 * (1.0 + seed.norm())) break;
  }
  return make_cycle(sys, line.point(s_b), line.period(s_b), tol);
}

std::vector<double> period_derivatives(
    const AutonomousSystem& sys,
    const std::function<Vec2(double)>& alpha_to_point, double alpha0,
    int max_order, double h, double t_max, const Tolerances& tol) {
  if (max_order < 1 || max_order > 4) {
    throw InvalidParams("period_derivatives supports orders 1 through 4");
  }
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidParams("period_derivatives requires a positive step h");
  }
  const auto T = [&](int k) {
    const Vec2 p = alpha_to_point(alpha0 + k * h);
    return return_time(sys, p, transversal_section(sys, p), t_max, tol);
  };
  const int reach = max_order <= 2 ? 1 : 2;
  // Stencil values by offset, index shifted by `reach`.
  std::vector<double> Tk(2 * reach + 1);
  for (int k = -reach; k <= reach; ++k) Tk[k + reach] = T(k);
  const auto at = [&](int k) { return Tk[k + reach]; };

  std::vector<double> d;
  d.push_back((at(1) - at(-1)) / (2.0 * h));
  if (max_order >= 2) {
    d.push_back((at(1) - 2.0 * at(0) + at(-1)) / (h * h));
  }
  if (max_order >= 3) {
    d.push_back((at(2) - 2.0 * at(1) + 2.0 * at(-1) - at(-2)) /
                (2.0 * h * h * h));
  }
  if (max_order >= 4) {
    d.push_back((at(2) - 4.0 * at(1) + 6.0 * at(0) - 4.0 * at(-1) + at(-2)) /
                (h * h * h * h));
  }
  return d;
}

PeriodScan period_scan(const AutonomousSystem& sys,
                       const std::function<Vec2(double)>& alpha_to_point,
                       double alpha_lo, double alpha_hi, int n_alpha,
                       int max_order, double t_max, const Tolerances& tol) {
  if (n_alpha < 2) throw InvalidParams("period_scan requires n_alpha >= 2");
  if (!(alpha_hi > alpha_lo)) {
    throw InvalidParams("period_scan requires alpha_hi > alpha_lo");
  }
  PeriodScan scan;
  scan.params.reserve(static_cast<std::size_t>(n_alpha));
  scan.periods.reserve(static_cast<std::size_t>(n_alpha));
  for (int i = 0; i < n_alpha; ++i) {
    const double a =
        alpha_lo + (alpha_hi - alpha_lo) * static_cast<double>(i) / (n_alpha - 1);
    const Vec2 p = alpha_to_point(a);
    scan.params.push_back(a);
    scan.periods.push_back(
        return_time(sys, p, transversal_section(sys, p), t_max, tol));
  }
  const double mid = 0.5 * (alpha_lo + alpha_hi);
  scan.derivative_estimates =
      period_derivatives(sys, alpha_to_point, mid, max_order,
                         1e-3 * (1.0 + std::abs(mid)), t_max, tol);
  return scan;
}

}  // namespace cyclecert
