#ifndef CYCLECERT_MELNIKOV_HPP
#define CYCLECERT_MELNIKOV_HPP

#include <optional>
#include <string>
#include <vector>

#include "cyclecert/ode_core.hpp"
#include "cyclecert/orbit_tools.hpp"

namespace cyclecert {

/// Which bifurcation function (and adjoint initial condition) to use:
/// A pairs with the tangent direction z_A(0) = v0 / |v0|^2, E with the
/// orthogonal direction z_E(0) = (-v0_2, v0_1), where v0 is the cycle's
/// start velocity.
enum class AdjointKind { A, E };

/// Faithful solution of the adjoint linearized equation along the cycle,
///   z'(tau) = -(f'(x0(tau)))^T z(tau),
/// with the initial condition selected by `which`, for tau in [0, 2T].
Vec2 adjoint_solution(const AutonomousSystem& sys, const Cycle& cycle,
                      AdjointKind which, double tau,
                      const Tolerances& tol = {});

/// Quadrature controls for the bifurcation functions.
struct MelnikovConfig {
  int quad_nodes = 64;  // Simpson start; doubled to convergence (cap 2^12)
  Tolerances tol;
};

/// Bifurcation function
///   M_j(theta) = integral_theta^{theta+T} <z_j(tau), g(tau - theta,
///                x0(tau), 0)> dtau,
/// with x0 extended T-periodically. Supported for theta in [0, 2T] so the
/// T-periodicity of the result itself is testable.
///
/// Frame choice, deliberate and load-bearing: for which = E the weight
/// z_E is the adjoint-equation solution above. For which = A the weight
/// is the T-periodic normalized tangent frame
///   z_A(tau) = x0'(tau) / |x0'(tau)|^2,
/// which solves the adjoint equation whenever the cycle's monodromy is
/// trivial and, unlike the raw adjoint solution, stays T-periodic when
/// the monodromy is a nontrivial unipotent (tangential shear). The shear
/// contributes a secular, non-periodic term to the raw adjoint solution
/// that has no invariant meaning for a periodicity criterion; the
/// normalized tangent frame is the standard periodic normalization and
/// keeps M_A itself T-periodic for every cycle this module accepts.
double melnikov_function(const PerturbedSystem& sys, const Cycle& cycle,
                         AdjointKind which, double theta,
                         const MelnikovConfig& cfg = {});

enum class ProfileStatus {
  TwoZeros,           // exactly two simple zeros of M_E on [0, T)
  NoZeros,            // M_E has no zeros
  MoreThanTwoZeros,   // more than two zeros: criterion not applicable
  Degenerate,         // identically small M_E or a tangential zero
};

struct MelnikovZero {
  double theta = 0.0;
  double slope = 0.0;  // central-difference derivative of M_E at theta
};

struct MelnikovProfile {
  std::vector<double> thetas;  // uniform grid over [0, T)
  std::vector<double> m_a;
  std::vector<double> m_e;
  std::vector<MelnikovZero> zeros_e;
  double sign_product_a = 0.0;  // M_A(theta_1) * M_A(theta_2) if TwoZeros
  double max_abs_e = 0.0;       // max |M_E| over the grid
  double slope_floor = 0.0;     // monotonicity bar: 1e-6 * max|M_E| / T
  ProfileStatus status = ProfileStatus::NoZeros;
};

/// Samples M_A and M_E on an n_theta grid (n_theta >= 32), locates the
/// zeros of M_E (grid sign changes and on-node zeros, refined by
/// bisection with a secant proposal), and records their slopes.
MelnikovProfile melnikov_profile(const PerturbedSystem& sys,
                                 const Cycle& cycle, int n_theta = 64,
                                 const MelnikovConfig& cfg = {});

/// Two-zero criterion: applies when M_E has exactly two zeros on [0, T),
/// both strictly monotone (|slope| above the profile's slope floor), and
/// M_A changes sign between them. Then the degree of -fbar over the cycle
/// interior is 0 or 2 — in particular it differs from 1.
struct DegreeCriterion {
  bool applies = false;
  std::optional<std::string> conclusion;
};

DegreeCriterion criterion_degree_0_or_2(const MelnikovProfile& profile);

}  // namespace cyclecert

#endif  // CYCLECERT_MELNIKOV_HPP
