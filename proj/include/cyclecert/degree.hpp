#ifndef CYCLECERT_DEGREE_HPP
#define CYCLECERT_DEGREE_HPP

#include <optional>
#include <string>
#include <vector>

#include "cyclecert/averaging.hpp"
#include "cyclecert/ode_core.hpp"
#include "cyclecert/orbit_tools.hpp"

namespace cyclecert {

/// Simple closed polygon in the plane with at least 8 vertices.
/// The constructor validates vertex count, simplicity (pairwise segment
/// intersection check) and a nonzero signed area; both orientations are
/// representable so orientation-sensitivity can be exercised, but every
/// factory here produces counterclockwise curves and the degree
/// operations traverse counterclockwise.
class ClosedCurve {
 public:
  explicit ClosedCurve(std::vector<Vec2> vertices);

  /// Regular n-gon inscribed in the circle, counterclockwise.
  static ClosedCurve circle(const Vec2& center, double radius, int n = 64);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  double signed_area() const { return signed_area_; }
  bool counterclockwise() const { return signed_area_ > 0.0; }
  ClosedCurve reversed() const;

 private:
  std::vector<Vec2> vertices_;
  double signed_area_ = 0.0;
};

/// Result of a certified winding-number computation. The value is exact
/// once every principal-value angle increment along the (refined) curve
/// is below pi/2 and the field stays off zero.
struct DegreeReport {
  int value = 0;
  int refinement_levels = 0;
  double max_angle_step = 0.0;
  double min_field_norm = 0.0;
};

/// Winding number of the field along the curve in its stored orientation:
/// the accumulated principal-value angle between consecutive field
/// samples, divided by 2*pi. Segments are bisected (chord midpoints)
/// until every increment is < pi/2. Throws ZeroOnBoundary when a sampled
/// field norm falls to 1e-10 relative to the median over the initial
/// vertices; RefinementExhausted after 20 bisection levels.
DegreeReport winding_number(const FieldFn& field, const ClosedCurve& curve);

/// Index of the isolated zero v0: winding number over the circle of the
/// given radius around v0, counterclockwise. On ZeroOnBoundary the radius
/// is halved, up to 10 times, before giving up.
DegreeReport poincare_index(const FieldFn& field, const Vec2& v0,
                            double radius, int n = 64);

/// Topological degree d(field, U) for U the interior of the curve:
/// winding number along the curve traversed counterclockwise regardless
/// of the stored orientation.
DegreeReport degree_over_cycle(const FieldFn& field, const ClosedCurve& curve);

/// One checked hypothesis of a theorem application: a name, whether the
/// sampled certificate holds, and the decisive number behind it.
struct Hypothesis {
  std::string name;
  bool holds = false;
  double evidence = 0.0;
};

enum class Conclusion { stable_periodic_solution_predicted, inconclusive };

struct TheoremVerdict {
  int theorem = 0;  // 1 or 2
  std::vector<Hypothesis> hypotheses;
  Conclusion conclusion = Conclusion::inconclusive;
  std::optional<ApproachSide> approach_side;  // theorem 2 only

  bool predicted() const {
    return conclusion == Conclusion::stable_periodic_solution_predicted;
  }
};

/// Shared knobs for the theorem checkers. eps_hi = 0 means "use the
/// system's eps_max"; the eps range is always treated as open at the
/// lower end.
struct CertificationConfig {
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  int periodicity_grid = 5;    // per-axis sampling of the region
  int curve_points = 64;       // vertices for index/degree curves
  double index_radius = 0.5;   // circle radius for the candidate zero
  int annulus_phases = 16;     // phases per offset ring (theorem 2)
  int div_nt = 8;              // divergence grid: time points
  int div_nx = 8;              //                  per space axis
  int div_ne = 4;              //                  eps points
  AveragingConfig averaging;
  Tolerances tol;
};

/// Certificate assembly for the isolated-zero criterion: (a) sampled
/// T-periodicity of unperturbed solutions over the region, (b) negative
/// divergence, (c) the averaged field vanishes at v_star (relative to its
/// median size on the index circle), (d) index of -fbar at v_star is
/// positive. Predicted only when all four hold.
TheoremVerdict check_theorem1(const PerturbedSystem& sys, const Vec2& v_star,
                              const Rect& region,
                              const CertificationConfig& cfg = {});

/// Certificate assembly for the cycle criterion: (a) the cycle period
/// matches the forcing period, (b) no T-periodic unperturbed solutions on
/// sampled annuli at radial offsets {+-w, +-w/2} off the cycle, (c)
/// negative divergence over the inflated bounding box, (d) degree of
/// -fbar over the cycle differs from 1. When (d) is computed, the
/// expected approach side is inside for degree > 1 and outside for
/// degree < 1.
TheoremVerdict check_theorem2(const PerturbedSystem& sys, const Cycle& cycle,
                              double annulus_width,
                              const CertificationConfig& cfg = {});

}  // namespace cyclecert

#endif  // CYCLECERT_DEGREE_HPP
