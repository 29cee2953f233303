#ifndef CYCLECERT_AVERAGING_HPP
#define CYCLECERT_AVERAGING_HPP

#include <vector>

#include "cyclecert/ode_core.hpp"

namespace cyclecert {

/// Quadrature controls for the averaged field.
struct AveragingConfig {
  /// Initial Simpson subinterval count over [0, T]; must be even and
  /// >= 16. Doubled until two successive quadrature values agree
  /// componentwise within 1e-9 (cap 2^14 subintervals).
  int quad_nodes = 64;
  Tolerances tol;
};

/// Averaged displacement field of the forcing along unperturbed orbits:
///
///   fbar(v) = integral_0^T [Y_v(tau)]^(-1) g(tau, Omega(tau,0,v), 0) dtau,
///
/// with Omega the unperturbed flow and Y_v(tau) = Omega'_x(tau,0,v) its
/// fundamental matrix (one augmented integration per v; the inverse is the
/// closed-form 2x2 solve, guarded by SingularVariational when
/// |det Y| < 1e-12 at a quadrature node).
///
/// The value is the full integral over one forcing period, NOT divided by
/// T. Zeros, indices and degrees are unchanged by that positive factor;
/// the mean form is this value / T and is reported alongside by the CLI.
Vec2 averaging_function(const PerturbedSystem& sys, const Vec2& v,
                        const AveragingConfig& cfg = {});

/// Samples of the averaged field over an inclusive n x n grid on `region`
/// (row-major: index i*n + j with i along the first axis). n = 1 samples
/// the region center.
struct AveragedField {
  Rect region;
  int n = 0;
  std::vector<Vec2> points;
  std::vector<Vec2> values;
};

AveragedField averaging_on_grid(const PerturbedSystem& sys,
                                const Rect& region, int n,
                                const AveragingConfig& cfg = {});

}  // namespace cyclecert

#endif  // CYCLECERT_AVERAGING_HPP
