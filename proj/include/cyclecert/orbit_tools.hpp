#ifndef CYCLECERT_ORBIT_TOOLS_HPP
#define CYCLECERT_ORBIT_TOOLS_HPP

#include <optional>
#include <vector>

#include "cyclecert/ode_core.hpp"

namespace cyclecert {

/// Oriented section line {x : <x - anchor, normal> = 0}. The normal is a
/// unit vector; crossings are counted in the direction of the flow at the
/// start point, so the first same-direction return is one full loop.
struct Section {
  Vec2 anchor;
  Vec2 normal;

  double signed_distance(const Vec2& x) const {
    return (x - anchor).dot(normal);
  }
};

/// Section through `anchor` transversal to the flow: normal along
/// f(anchor). Throws TangentialCrossing if the field vanishes there.
Section transversal_section(const AutonomousSystem& sys, const Vec2& anchor);

/// First return time of the trajectory from v to the section, crossing in
/// the same direction as the flow leaves it. The crossing is bracketed on
/// the dense output and refined by bisection to |signed distance| <= 1e-10.
/// Throws NoReturn if no same-direction crossing occurs within t_max,
/// TangentialCrossing if |<f, normal>| < 1e-8 at the start or the crossing.
double return_time(const AutonomousSystem& sys, const Vec2& v,
                   const Section& section, double t_max,
                   const Tolerances& tol = {});

/// A verified periodic orbit of the unperturbed system with its dense
/// parameterization over one period.
struct Cycle {
  Vec2 start;
  double period = 0.0;
  Trajectory orbit;
  Vec2 velocity_start;

  /// x0(t), extended by periodicity to all t.
  Vec2 at(double t) const;
  /// n points x0(k*period/n), k = 0..n-1 (one full loop, no repeat).
  std::vector<Vec2> sample_points(int n) const;
};

/// Integrates one loop from `start` and validates the Cycle invariants:
/// |Omega(period,0,start) - start| <= 1e-8 * (1 + |start|) (else
/// NotPeriodic) and a nonvanishing field at the start.
Cycle make_cycle(const AutonomousSystem& sys, const Vec2& start, double period,
                 const Tolerances& tol = {});

/// Locates a periodic orbit near `seed`. Without a target period the seed
/// itself must close up (return-map fixed point refined along the section
/// when it does not). With `target_period`, performs one-dimensional
/// root-finding on the amplitude parameter s along the section line
/// through the seed (direction = 90-degree rotation of the normal) until
/// the return time matches within 1e-8; throws AmplitudeRootNotBracketed
/// when no bracket exists in the searched range.
Cycle find_cycle(const AutonomousSystem& sys, const Vec2& seed,
                 std::optional<double> target_period = std::nullopt,
                 const Tolerances& tol = {}, double t_max = 100.0);

/// Period function sweep: periods of the orbits through alpha_to_point(a)
/// for each amplitude a, with central finite-difference derivative
/// estimates at the midpoint when requested.
struct PeriodScan {
  std::vector<double> params;
  std::vector<double> periods;
  std::vector<double> derivative_estimates;  // by order, 1..max_order
};

/// Central finite-difference estimates of T'(alpha0), ..., up to
/// max_order (<= 4), from return times of the orbits through
/// alpha_to_point(alpha0 + k*h). Each point gets its own transversal
/// section. The default step policy is h = 1e-3 * (1 + |alpha0|).
std::vector<double> period_derivatives(
    const AutonomousSystem& sys,
    const std::function<Vec2(double)>& alpha_to_point, double alpha0,
    int max_order, double h, double t_max = 100.0,
    const Tolerances& tol = {});

/// Periods over a uniform amplitude grid [alpha_lo, alpha_hi] plus the
/// derivative estimates at the grid midpoint.
PeriodScan period_scan(const AutonomousSystem& sys,
                       const std::function<Vec2(double)>& alpha_to_point,
                       double alpha_lo, double alpha_hi, int n_alpha,
                       int max_order = 2, double t_max = 100.0,
                       const Tolerances& tol = {});

}  // namespace cyclecert

#endif  // CYCLECERT_ORBIT_TOOLS_HPP
