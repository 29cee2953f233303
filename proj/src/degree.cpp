#include "cyclecert/degree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace cyclecert {

namespace {

constexpr double kZeroRelThreshold = 1e-10;
constexpr int kMaxRefinementLevels = 20;
constexpr double kAngleBound = M_PI / 2.0;

double cross(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

// Proper or touching intersection of segments [p1,p2] and [q1,q2].
bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                        const Vec2& q2) {
  const auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    return std::min(a.x(), b.x()) <= c.x() && c.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= c.y() && c.y() <= std::max(a.y(), b.y());
  };
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

double polygon_signed_area(const std::vector<Vec2>& v) {
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % v.size()];
    twice += cross(a, b);
  }
  return 0.5 * twice;
}

}  // namespace

ClosedCurve::ClosedCurve(std::vector<Vec2> vertices)
    : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 8) {
    throw InvalidParams("closed curves need at least 8 vertices, got " +
                        std::to_string(n));
  }
  // Simplicity: no two non-adjacent segments may meet. Adjacent segments
  // share exactly one endpoint by construction and are skipped.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(vertices_[i], vertices_[(i + 1) % n],
                             vertices_[j], vertices_[(j + 1) % n])) {
        throw InvalidParams("curve is not simple: segments " +
                            std::to_string(i) + " and " + std::to_string(j) +
                            " intersect");
      }
    }
  }
  signed_area_ = polygon_signed_area(vertices_);
  if (signed_area_ == 0.0) {
    throw InvalidParams("curve has zero signed area");
  }
}

ClosedCurve ClosedCurve::circle(const Vec2& center, double radius, int n) {
  if (!(radius > 0.0)) {
    throw InvalidParams("circle factory requires a positive radius");
  }
  if (n < 8) {
    throw InvalidParams("circle factory requires n >= 8");
  }
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double phi = 2.0 * M_PI * static_cast<double>(k) / n;
    pts.emplace_back(center.x() + radius * std::cos(phi),
                     center.y() + radius * std::sin(phi));
  }
  return ClosedCurve(std::move(pts));
}

ClosedCurve ClosedCurve::reversed() const {
  std::vector<Vec2> rev(vertices_.rbegin(), vertices_.rend());
  return ClosedCurve(std::move(rev));
}

DegreeReport winding_number(const FieldFn& field, const ClosedCurve& curve) {
  struct Sample {
    Vec2 point;
    Vec2 value;
  };
  std::vector<Sample> samples;
  samples.reserve(curve.vertices().size());
  for (const Vec2& p : curve.vertices()) {
    samples.push_back({p, field(p)});
  }

  // The zero threshold is fixed from the initial vertices: 1e-10 relative
  // to the median field norm there.
  std::vector<double> norms;
  norms.reserve(samples.size());
  for (const Sample& s : samples) norms.push_back(s.value.norm());
  std::vector<double> sorted = norms;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double threshold = kZeroRelThreshold * median;
  const auto check_nonzero = [&](const Sample& s) {
    if (s.value.norm() <= threshold) {
      throw ZeroOnBoundary("field norm " + std::to_string(s.value.norm()) +
                           " at (" + std::to_string(s.point.x()) + ", " +
                           std::to_string(s.point.y()) +
                           ") is below the boundary-zero threshold " +
                           std::to_string(threshold));
    }
  };
  for (const Sample& s : samples) check_nonzero(s);

  const auto increment = [](const Sample& a, const Sample& b) {
    return std::atan2(cross(a.value, b.value), a.value.dot(b.value));
  };

  int levels = 0;
  for (;; ++levels) {
    bool all_fine = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Sample& a = samples[i];
      const Sample& b = samples[(i + 1) % samples.size()];
      if (std::abs(increment(a, b)) >= kAngleBound) {
        all_fine = false;
        break;
      }
    }
    if (all_fine) break;
    if (levels >= kMaxRefinementLevels) {
      throw RefinementExhausted(
          "angle increments still reach pi/2 after " +
          std::to_string(kMaxRefinementLevels) + " bisection levels");
    }
    std::vector<Sample> refined;
    refined.reserve(2 * samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Sample& a = samples[i];
      const Sample& b = samples[(i + 1) % samples.size()];
      refined.push_back(a);
      if (std::abs(increment(a, b)) >= kAngleBound) {
        const Vec2 mid = 0.5 * (a.point + b.point);
        Sample s{mid, field(mid)};
        check_nonzero(s);
        refined.push_back(std::move(s));
      }
    }
    samples = std::move(refined);
  }

  double total = 0.0;
  double max_step = 0.0;
  double min_norm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& a = samples[i];
    const Sample& b = samples[(i + 1) % samples.size()];
    const double d = increment(a, b);
    total += d;
    max_step = std::max(max_step, std::abs(d));
    min_norm = std::min(min_norm, a.value.norm());
  }

  DegreeReport report;
  report.value = static_cast<int>(std::lround(total / (2.0 * M_PI)));
  report.refinement_levels = levels;
  report.max_angle_step = max_step;
  report.min_field_norm = min_norm;
  return report;
}

DegreeReport poincare_index(const FieldFn& field, const Vec2& v0,
                            double radius, int n) {
  double r = radius;
  for (int attempt = 0;; ++attempt) {
    try {
      return winding_number(field, ClosedCurve::circle(v0, r, n));
    } catch (const ZeroOnBoundary&) {
      if (attempt >= 10) throw;
      r *= 0.5;
    }
  }
}

DegreeReport degree_over_cycle(const FieldFn& field, const ClosedCurve& curve) {
  if (curve.counterclockwise()) return winding_number(field, curve);
  return winding_number(field, curve.reversed());
}

namespace {

Hypothesis periodicity_hypothesis(const PerturbedSystem& sys,
                                  const Rect& region,
                                  const CertificationConfig& cfg) {
  const int n = std::max(2, cfg.periodicity_grid);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 v(region.lo.x() +
                       (region.hi.x() - region.lo.x()) * i / double(n - 1),
                   region.lo.y() +
                       (region.hi.y() - region.lo.y()) * j / double(n - 1));
      const double miss =
          (flow(sys.base, sys.period, 0.0, v, cfg.tol) - v).norm() /
          (1.0 + v.norm());
      worst = std::max(worst, miss);
    }
  }
  return {"unperturbed_solutions_T_periodic_in_region", worst <= 1e-6, worst};
}

Hypothesis divergence_hypothesis(const PerturbedSystem& sys, const Rect& region,
                                 const CertificationConfig& cfg) {
  const double eps_hi = cfg.eps_hi > 0.0 ? cfg.eps_hi : sys.eps_max;
  const DivergenceCertificate cert =
      check_divergence_condition(sys, region, cfg.eps_lo, eps_hi, cfg.div_nt,
                                 cfg.div_nx, cfg.div_ne);
  return {"divergence_negative", cert.holds, cert.max_value};
}

}  // namespace

TheoremVerdict check_theorem1(const PerturbedSystem& sys, const Vec2& v_star,
                              const Rect& region,
                              const CertificationConfig& cfg) {
  TheoremVerdict verdict;
  verdict.theorem = 1;

  verdict.hypotheses.push_back(periodicity_hypothesis(sys, region, cfg));
  verdict.hypotheses.push_back(divergence_hypothesis(sys, region, cfg));

  // (c) candidate zero, measured against the median averaged-field size
  // on the index circle.
  const auto fbar = [&](const Vec2& v) {
    return averaging_function(sys, v, cfg.averaging);
  };
  std::vector<double> circle_norms;
  circle_norms.reserve(static_cast<std::size_t>(cfg.curve_points));
  for (int k = 0; k < cfg.curve_points; ++k) {
    const double phi = 2.0 * M_PI * k / cfg.curve_points;
    const Vec2 v = v_star + cfg.index_radius * Vec2(std::cos(phi),
                                                    std::sin(phi));
    circle_norms.push_back(fbar(v).norm());
  }
  std::nth_element(circle_norms.begin(),
                   circle_norms.begin() + circle_norms.size() / 2,
                   circle_norms.end());
  const double median = circle_norms[circle_norms.size() / 2];
  const double at_candidate = fbar(v_star).norm();
  verdict.hypotheses.push_back({"averaged_field_vanishes_at_candidate",
                                at_candidate <= 1e-7 * median, at_candidate});

  // (d) positive index of -fbar at the candidate.
  Hypothesis index_hyp{"index_of_negated_averaged_field_positive", false, 0.0};
  try {
    const DegreeReport report = poincare_index(
        [&](const Vec2& v) { return (-fbar(v)).eval(); }, v_star,
        cfg.index_radius, cfg.curve_points);
    index_hyp.holds = report.value > 0;
    index_hyp.evidence = static_cast<double>(report.value);
  } catch (const ZeroOnBoundary&) {
    // The averaged field vanishes along the circle; no index exists.
  }
  verdict.hypotheses.push_back(index_hyp);

  const bool all = std::all_of(verdict.hypotheses.begin(),
                               verdict.hypotheses.end(),
                               [](const Hypothesis& h) { return h.holds; });
  verdict.conclusion = all ? Conclusion::stable_periodic_solution_predicted
                           : Conclusion::inconclusive;
  return verdict;
}

TheoremVerdict check_theorem2(const PerturbedSystem& sys, const Cycle& cycle,
                              double annulus_width,
                              const CertificationConfig& cfg) {
  if (!(annulus_width > 0.0)) {
    throw InvalidParams("check_theorem2 requires a positive annulus width");
  }
  TheoremVerdict verdict;
  verdict.theorem = 2;

  // (a) cycle period against the forcing period.
  const double period_miss = std::abs(cycle.period - sys.period);
  verdict.hypotheses.push_back(
      {"cycle_period_matches_forcing_period", period_miss <= 1e-6,
       period_miss});

  // (b) no T-periodic unperturbed solutions off the cycle: sample four
  // offset rings at +-w and +-w/2 along the unit normal of the cycle.
  double min_miss = std::numeric_limits<double>::infinity();
  for (const double offset :
       {annulus_width, 0.5 * annulus_width, -0.5 * annulus_width,
        -annulus_width}) {
    for (int k = 0; k < cfg.annulus_phases; ++k) {
      const double t = cycle.period * k / cfg.annulus_phases;
      const Vec2 x = cycle.at(t);
      const Vec2 f = sys.base.f(x);
      const Vec2 normal = Vec2(-f.y(), f.x()).normalized();
      const Vec2 v = x + offset * normal;
      const double miss =
          (flow(sys.base, sys.period, 0.0, v, cfg.tol) - v).norm() /
          (1.0 + v.norm());
      min_miss = std::min(min_miss, miss);
    }
  }
  verdict.hypotheses.push_back(
      {"no_T_periodic_solutions_off_cycle", min_miss > 1e-5, min_miss});

  // (c) divergence over the inflated bounding box of the cycle.
  Rect box{cycle.start, cycle.start};
  for (const Vec2& p : cycle.sample_points(std::max(cfg.curve_points, 64))) {
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  box.lo.array() -= annulus_width;
  box.hi.array() += annulus_width;
  verdict.hypotheses.push_back(divergence_hypothesis(sys, box, cfg));

  // (d) degree of -fbar over the cycle differs from 1.
  Hypothesis degree_hyp{"degree_of_negated_averaged_field_not_one", false,
                        0.0};
  std::optional<int> degree_value;
  try {
    const ClosedCurve curve(cycle.sample_points(cfg.curve_points));
    const DegreeReport report = degree_over_cycle(
        [&](const Vec2& v) {
          return (-averaging_function(sys, v, cfg.averaging)).eval();
        },
        curve);
    degree_value = report.value;
    degree_hyp.holds = report.value != 1;
    degree_hyp.evidence = static_cast<double>(report.value);
  } catch (const ZeroOnBoundary&) {
    // Vanishing averaged field: no degree, hypothesis fails.
  }
  verdict.hypotheses.push_back(degree_hyp);

  if (degree_value && *degree_value != 1) {
    verdict.approach_side = *degree_value > 1 ? ApproachSide::inside
                                              : ApproachSide::outside;
  }

  const bool all = std::all_of(verdict.hypotheses.begin(),
                               verdict.hypotheses.end(),
                               [](const Hypothesis& h) { return h.holds; });
  verdict.conclusion = all ? Conclusion::stable_periodic_solution_predicted
                           : Conclusion::inconclusive;
  return verdict;
}

}  // namespace cyclecert
