#ifndef CYCLECERT_ODE_CORE_HPP
#define CYCLECERT_ODE_CORE_HPP

#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "cyclecert/integrate.hpp"
#include "cyclecert/types.hpp"

namespace cyclecert {

using FieldFn = std::function<Vec2(const Vec2&)>;
using JacFn = std::function<Mat2(const Vec2&)>;
using ScalarFieldFn = std::function<double(const Vec2&)>;
using ForcingFn = std::function<Vec2(double, const Vec2&, double)>;
using ForcingJacFn = std::function<Mat2(double, const Vec2&, double)>;
using ForcingScalarFn = std::function<double(double, const Vec2&, double)>;

/// Unperturbed planar field x' = f(x). `jac_f` and `div_f` are optional
/// analytic callbacks; absent ones fall back to central differences
/// (step fd_step * (1 + |x|)) resp. the Jacobian trace.
struct AutonomousSystem {
  FieldFn f;
  JacFn jac_f;
  ScalarFieldFn div_f;
};

/// Periodically forced field x' = f(x) + eps * g(t, x, eps) with forcing
/// period `period` and the admissible range (0, eps_max] for eps.
/// g must be `period`-periodic in t.
struct PerturbedSystem {
  AutonomousSystem base;
  ForcingFn g;
  ForcingJacFn jac_g;
  ForcingScalarFn div_g;
  double period = 2.0 * M_PI;
  double eps_max = 0.2;
};

/// Jacobian of the unperturbed field (analytic if provided).
Mat2 field_jacobian(const AutonomousSystem& sys, const Vec2& x,
                    double fd_step = 1e-6);

/// x-Jacobian of the forcing g at fixed (t, eps) (analytic if provided).
Mat2 forcing_jacobian(const PerturbedSystem& sys, double t, const Vec2& x,
                      double eps, double fd_step = 1e-6);

/// Right-hand side and its x-Jacobian of the full field at fixed eps.
Vec2 full_field(const PerturbedSystem& sys, double eps, double t,
                const Vec2& x);
Mat2 full_field_jacobian(const PerturbedSystem& sys, double eps, double t,
                         const Vec2& x, double fd_step = 1e-6);

/// A solution segment with dense output; `eval` interpolates anywhere in
/// the covered time span, `samples` returns the accepted step nodes.
struct Trajectory {
  DenseSolution<2> dense;

  Vec2 eval(double t) const { return dense.eval(t); }
  double t_begin() const { return dense.t_begin(); }
  double t_end() const { return dense.t_end(); }
  std::vector<std::pair<double, Vec2>> samples() const;
};

/// Flow map Omega(t, t0, v) of the unperturbed system; t < t0 integrates
/// backward. flow(t0, t0, v) == v exactly.
Vec2 flow(const AutonomousSystem& sys, double t, double t0, const Vec2& v,
          const Tolerances& tol = {});
/// Flow map of the full perturbed field at fixed eps.
Vec2 flow(const PerturbedSystem& sys, double eps, double t, double t0,
          const Vec2& v, const Tolerances& tol = {});

/// Same flows, keeping the dense output.
Trajectory flow_trajectory(const AutonomousSystem& sys, double t, double t0,
                           const Vec2& v, const Tolerances& tol = {});
Trajectory flow_trajectory(const PerturbedSystem& sys, double eps, double t,
                           double t0, const Vec2& v, const Tolerances& tol = {});

/// Joint dense solution of the base trajectory and its fundamental matrix
/// Y(t) = Omega'_x(t, t0, v) (6-dimensional augmented integration).
struct VariationalSolution {
  DenseSolution<6> dense;

  Vec2 x(double t) const;
  Mat2 Y(double t) const;
  double t_begin() const { return dense.t_begin(); }
  double t_end() const { return dense.t_end(); }
};

VariationalSolution variational_trajectory(const AutonomousSystem& sys,
                                           double t, double t0, const Vec2& v,
                                           const Tolerances& tol = {});
VariationalSolution variational_trajectory(const PerturbedSystem& sys,
                                           double eps, double t, double t0,
                                           const Vec2& v,
                                           const Tolerances& tol = {});

/// Fundamental-matrix solution Omega'_x(t, t0, v) of the variational
/// equation y' = f'(Omega(tau, t0, v)) y, y(t0) = I.
Mat2 variational_matrix(const AutonomousSystem& sys, double t, double t0,
                        const Vec2& v, const Tolerances& tol = {});
Mat2 variational_matrix(const PerturbedSystem& sys, double eps, double t,
                        double t0, const Vec2& v, const Tolerances& tol = {});

/// Divergence of the full field: div f(x) + eps * div_x g(t, x, eps),
/// analytic callbacks preferred, otherwise central differences.
double divergence(const PerturbedSystem& sys, double t, const Vec2& x,
                  double eps, double fd_step = 1e-6);
/// Divergence of an unperturbed field alone.
double divergence(const AutonomousSystem& sys, const Vec2& x,
                  double fd_step = 1e-6);

/// Sampled negativity certificate for the divergence over
/// [0, T) x region x eps_range. A grid check, not a proof: `max_value`
/// and its argmax expose the margin.
struct DivergenceCertificate {
  bool holds = false;
  double max_value = 0.0;
  double argmax_t = 0.0;
  Vec2 argmax_x = Vec2::Zero();
  double argmax_eps = 0.0;
};

/// Grid sizes: nt time points over [0, T), nx per space axis, ne eps
/// points in (eps_lo, eps_hi] (left end excluded: the admissible range is
/// open at 0). All must be >= 2.
DivergenceCertificate check_divergence_condition(
    const PerturbedSystem& sys, const Rect& region, double eps_lo,
    double eps_hi, int nt = 8, int nx = 8, int ne = 4, double fd_step = 1e-6);

/// Eigenvalues of the monodromy matrix Omega'_x(T, 0, v), sorted by
/// modulus descending (closed-form 2x2 solve). Throws NotPeriodic when
/// |Omega(T,0,v) - v| > 1e-6 * (1 + |v|).
std::array<Complex, 2> monodromy_eigenvalues(const AutonomousSystem& sys,
                                             const Vec2& cycle_start, double T,
                                             const Tolerances& tol = {});

/// Closed-form eigenvalues of a real 2x2 matrix, modulus-descending.
std::array<Complex, 2> eigenvalues_2x2(const Mat2& m);

}  // namespace cyclecert

#endif  // CYCLECERT_ODE_CORE_HPP
