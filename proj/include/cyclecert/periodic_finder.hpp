#ifndef CYCLECERT_PERIODIC_FINDER_HPP
#define CYCLECERT_PERIODIC_FINDER_HPP

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cyclecert/ode_core.hpp"
#include "cyclecert/orbit_tools.hpp"

namespace cyclecert {

/// Fixed point of the stroboscopic (time-T) map at one eps together with
/// the Floquet data of the corresponding T-periodic solution.
struct FloquetData {
  double eps = 0.0;
  Vec2 fixed_point = Vec2::Zero();
  double residual = 0.0;  // |P_eps(fixed_point) - fixed_point|
  std::pair<Complex, Complex> multipliers{};
  bool stable = false;  // both |multiplier| < 1 - 1e-9
};

/// One eps of a continuation run: the located periodic solution and how
/// far it sits from the unperturbed generator it continues from.
struct ContinuationRow {
  FloquetData floquet;
  double dist_to_generator = 0.0;
  std::optional<ApproachSide> side;  // cycle references only

  double eps() const { return floquet.eps; }
  const Vec2& fixed_point() const { return floquet.fixed_point; }
};

/// Continuation rows in schedule order; `complete` is false when a row
/// failed and the list was truncated at the last success.
struct ContinuationResult {
  std::vector<ContinuationRow> rows;
  bool complete = true;
  std::string failure;  // what() of the terminating error, empty if none
};

/// What a continuation measures convergence against: a single point
/// (distance of the fixed points to it) or a whole cycle (set distance
/// of the orbit's samples to the cycle polyline, plus a side flag).
using ContinuationReference = std::variant<Vec2, Cycle>;

/// Time-T solution operator P_eps(v) of the forced system: the solution
/// at time `period` started from v at time 0.
Vec2 stroboscopic_map(const PerturbedSystem& sys, double eps, const Vec2& v,
                      const Tolerances& tol = {});

/// P_eps(v) together with its Jacobian DP_eps(v) from the variational
/// flow of the full field.
std::pair<Vec2, Mat2> stroboscopic_map_with_jacobian(
    const PerturbedSystem& sys, double eps, const Vec2& v,
    const Tolerances& tol = {});

/// Damped Newton iteration on v -> P_eps(v) - v from `guess`: full steps
/// with the variational Jacobian, halving up to 8 times when the residual
/// does not decrease. Converges to |P_eps(v) - v| <= 1e-11 * (1 + |v|).
/// Throws NewtonDiverged after 50 iterations or a failed damping sweep,
/// SingularJacobian when |det(DP - I)| < 1e-12 (near small eps the period
/// map of a degenerate resonance is tangent to the identity; increase eps
/// or seed from attractor_probe).
FloquetData find_periodic(const PerturbedSystem& sys, double eps,
                          const Vec2& guess, const Tolerances& tol = {});

/// Runs find_periodic along a strictly decreasing positive eps schedule,
/// warm-starting each row from the previous fixed point. Point reference:
/// dist = |x_eps(0) - ref|, no side. Cycle reference: dist = max over the
/// orbit's samples (fixed point + 256 dense points per period) of the
/// minimum distance to the cycle polyline; side = whether x_eps(0) lies
/// inside the sampled cycle polygon (even-odd rule).
ContinuationResult continuation(const PerturbedSystem& sys,
                                const std::vector<double>& eps_schedule,
                                const Vec2& initial_guess,
                                const ContinuationReference& reference,
                                const Tolerances& tol = {});

/// Outcome of iterating the stroboscopic map from a test point.
struct AttractorProbe {
  bool converged = false;
  Vec2 limit_point = Vec2::Zero();
  std::vector<double> step_sizes;  // |v_{k+1} - v_k| per period
};

/// Iterates P_eps from v0 for n_periods (>= 10) periods. converged is
/// true when the step sizes contract over the last 10 steps (or the final
/// step is at arithmetic-noise level); limit_point is the last iterate.
/// An independent stability check used to seed and confirm find_periodic.
AttractorProbe attractor_probe(const PerturbedSystem& sys, double eps,
                               const Vec2& v0, int n_periods,
                               const Tolerances& tol = {});

}  // namespace cyclecert

#endif  // CYCLECERT_PERIODIC_FINDER_HPP
