#include "cyclecert/periodic_finder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cyclecert {
namespace {

constexpr int kMaxNewtonIterations = 50;
constexpr int kMaxStepHalvings = 8;
constexpr double kSingularDetFloor = 1e-12;
constexpr double kStabilityMargin = 1e-9;
constexpr double kContractionSlack = 1e-9;
constexpr int kContractionWindow = 10;
constexpr int kCyclePolylinePoints = 512;
constexpr int kDenseSamplesPerPeriod = 256;

std::string fmt(double x) { return std::to_string(x); }

double newton_target(const Vec2& v) { return 1e-11 * (1.0 + v.norm()); }

void validate_eps(const PerturbedSystem& sys, double eps) {
  if (!std::isfinite(eps) || eps < 0.0 || eps > sys.eps_max) {
    throw InvalidParams("eps = " + fmt(eps) + " outside the admissible [0, " +
                        fmt(sys.eps_max) + "]");
  }
  if (!(sys.period > 0.0)) {
    throw InvalidParams("forcing period must be positive");
  }
}

/// Distance from p to the segment [a, b].
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

/// Minimum distance from p to the closed polyline through `poly`.
double point_polyline_distance(const Vec2& p, const std::vector<Vec2>& poly) {
  double best = (p - poly.front()).norm();
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& a = poly[k];
    const Vec2& b = poly[(k + 1) % poly.size()];
    best = std::min(best, point_segment_distance(p, a, b));
  }
  return best;
}

/// Even-odd rule: does p lie inside the closed polygon `poly`?
bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool inside = false;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& a = poly[k];
    const Vec2& b = poly[(k + 1) % poly.size()];
    const bool straddles = (a.y() > p.y()) != (b.y() > p.y());
    if (straddles) {
      const double x_cross =
          a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

/// Set distance of the eps-periodic orbit to the reference cycle: max over
/// the orbit's samples (the fixed point plus uniform dense-output points
/// over one period) of the minimum distance to the cycle polyline.
double orbit_to_cycle_distance(const PerturbedSystem& sys, double eps,
                               const Vec2& fixed_point, const Cycle& cycle,
                               const Tolerances& tol) {
  const std::vector<Vec2> poly = cycle.sample_points(kCyclePolylinePoints);
  const Trajectory orbit =
      flow_trajectory(sys, eps, sys.period, 0.0, fixed_point, tol);
  double dist = point_polyline_distance(fixed_point, poly);
  for (int k = 1; k <= kDenseSamplesPerPeriod; ++k) {
    const double t = sys.period * k / (kDenseSamplesPerPeriod + 1.0);
    dist = std::max(dist, point_polyline_distance(orbit.eval(t), poly));
  }
  return dist;
}

}  // namespace

Vec2 stroboscopic_map(const PerturbedSystem& sys, double eps, const Vec2& v,
                      const Tolerances& tol) {
  validate_eps(sys, eps);
  return flow(sys, eps, sys.period, 0.0, v, tol);
}

std::pair<Vec2, Mat2> stroboscopic_map_with_jacobian(
    const PerturbedSystem& sys, double eps, const Vec2& v,
    const Tolerances& tol) {
  validate_eps(sys, eps);
  const VariationalSolution sol =
      variational_trajectory(sys, eps, sys.period, 0.0, v, tol);
  return {sol.x(sys.period), sol.Y(sys.period)};
}

FloquetData find_periodic(const PerturbedSystem& sys, double eps,
                          const Vec2& guess, const Tolerances& tol) {
  validate_eps(sys, eps);
  if (!tol.valid()) throw InvalidParams("invalid tolerances");
  if (!guess.allFinite()) throw InvalidParams("guess must be finite");

  Vec2 v = guess;
  auto [mapped, jacobian] = stroboscopic_map_with_jacobian(sys, eps, v, tol);
  Vec2 defect = mapped - v;
  double residual = defect.norm();

  int iterations = 0;
  while (residual > newton_target(v)) {
    if (++iterations > kMaxNewtonIterations) {
      throw NewtonDiverged("residual " + fmt(residual) + " after " +
                           fmt(kMaxNewtonIterations) + " iterations");
    }
    const Mat2 shifted = jacobian - Mat2::Identity();
    const double det = shifted.determinant();
    if (std::abs(det) < kSingularDetFloor) {
      throw SingularJacobian(
          "|det(DP - I)| = " + fmt(std::abs(det)) +
          "; the period map is tangent to the identity at eps = " + fmt(eps) +
          " (increase eps or seed from attractor_probe)");
    }
    const Vec2 full_step = shifted.inverse() * (-defect);
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxStepHalvings; ++halving) {
      const Vec2 trial = v + scale * full_step;
      if (trial.allFinite()) {
        auto [trial_mapped, trial_jacobian] =
            stroboscopic_map_with_jacobian(sys, eps, trial, tol);
        const Vec2 trial_defect = trial_mapped - trial;
        const double trial_residual = trial_defect.norm();
        if (trial_residual < residual || trial_residual <= newton_target(trial)) {
          v = trial;
          jacobian = trial_jacobian;
          defect = trial_defect;
          residual = trial_residual;
          accepted = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!accepted) {
      throw NewtonDiverged("residual " + fmt(residual) +
                           " not reduced by any of " + fmt(kMaxStepHalvings) +
                           " step halvings");
    }
  }

  FloquetData out;
  out.eps = eps;
  out.fixed_point = v;
  out.residual = residual;
  const auto eig = eigenvalues_2x2(jacobian);
  out.multipliers = {eig[0], eig[1]};
  out.stable = std::abs(eig[0]) < 1.0 - kStabilityMargin &&
               std::abs(eig[1]) < 1.0 - kStabilityMargin;
  return out;
}

ContinuationResult continuation(const PerturbedSystem& sys,
                                const std::vector<double>& eps_schedule,
                                const Vec2& initial_guess,
                                const ContinuationReference& reference,
                                const Tolerances& tol) {
  if (eps_schedule.empty()) {
    throw InvalidParams("eps schedule must be non-empty");
  }
  for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
    if (!(eps_schedule[k] > 0.0)) {
      throw InvalidParams("eps schedule entries must be positive");
    }
    if (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1])) {
      throw InvalidParams("eps schedule must be strictly decreasing");
    }
  }

  ContinuationResult result;
  Vec2 guess = initial_guess;
  for (const double eps : eps_schedule) {
    try {
      ContinuationRow row;
      row.floquet = find_periodic(sys, eps, guess, tol);
      if (const Vec2* point = std::get_if<Vec2>(&reference)) {
        row.dist_to_generator = (row.floquet.fixed_point - *point).norm();
      } else {
        const Cycle& cycle = std::get<Cycle>(reference);
        row.dist_to_generator = orbit_to_cycle_distance(
            sys, eps, row.floquet.fixed_point, cycle, tol);
        row.side = point_in_polygon(row.floquet.fixed_point,
                                    cycle.sample_points(kCyclePolylinePoints))
                       ? ApproachSide::inside
                       : ApproachSide::outside;
      }
      guess = row.floquet.fixed_point;
      result.rows.push_back(std::move(row));
    } catch (const Error& e) {
      result.complete = false;
      result.failure = e.what();
      break;
    }
  }
  return result;
}

AttractorProbe attractor_probe(const PerturbedSystem& sys, double eps,
                               const Vec2& v0, int n_periods,
                               const Tolerances& tol) {
  validate_eps(sys, eps);
  if (n_periods < kContractionWindow) {
    throw InvalidParams("n_periods must be >= " + fmt(kContractionWindow));
  }
  AttractorProbe out;
  out.step_sizes.reserve(static_cast<std::size_t>(n_periods));
  Vec2 v = v0;
  for (int k = 0; k < n_periods; ++k) {
    const Vec2 next = stroboscopic_map(sys, eps, v, tol);
    out.step_sizes.push_back((next - v).norm());
    v = next;
  }
  out.limit_point = v;

  const double noise_floor = 1e-13 * (1.0 + v.norm());
  if (out.step_sizes.back() <= noise_floor) {
    out.converged = true;
    return out;
  }
  const std::size_t n = out.step_sizes.size();
  bool contracting = true;
  for (std::size_t k = n - kContractionWindow; k + 1 < n; ++k) {
    if (!(out.step_sizes[k + 1] <=
          out.step_sizes[k] * (1.0 - kContractionSlack))) {
      contracting = false;
      break;
    }
  }
  out.converged = contracting;
  return out;
}

}  // namespace cyclecert
