#include "cyclecert/ode_core.hpp"

#include <cmath>
#include <limits>

namespace cyclecert {

namespace {

double fd_increment(double fd_step, const Vec2& x) {
  return fd_step * (1.0 + x.norm());
}

// pack/unpack of the augmented state [x; Y] (Y column-major)
VecN<6> pack(const Vec2& x, const Mat2& y) {
  VecN<6> z;
  z << x(0), x(1), y(0, 0), y(1, 0), y(0, 1), y(1, 1);
  return z;
}

Vec2 unpack_x(const VecN<6>& z) { return Vec2(z(0), z(1)); }

Mat2 unpack_y(const VecN<6>& z) {
  Mat2 y;
  y << z(2), z(4), z(3), z(5);
  return y;
}

}  // namespace

Mat2 field_jacobian(const AutonomousSystem& sys, const Vec2& x,
                    double fd_step) {
  if (sys.jac_f) return sys.jac_f(x);
  const double h = fd_increment(fd_step, x);
  Mat2 j;
  for (int i = 0; i < 2; ++i) {
    Vec2 e = Vec2::Zero();
    e(i) = h;
    j.col(i) = (sys.f(x + e) - sys.f(x - e)) / (2.0 * h);
  }
  return j;
}

Mat2 forcing_jacobian(const PerturbedSystem& sys, double t, const Vec2& x,
                      double eps, double fd_step) {
  if (sys.jac_g) return sys.jac_g(t, x, eps);
  const double h = fd_increment(fd_step, x);
  Mat2 j;
  for (int i = 0; i < 2; ++i) {
    Vec2 e = Vec2::Zero();
    e(i) = h;
    j.col(i) = (sys.g(t, x + e, eps) - sys.g(t, x - e, eps)) / (2.0 * h);
  }
  return j;
}

Vec2 full_field(const PerturbedSystem& sys, double eps, double t,
                const Vec2& x) {
  return sys.base.f(x) + eps * sys.g(t, x, eps);
}

Mat2 full_field_jacobian(const PerturbedSystem& sys, double eps, double t,
                         const Vec2& x, double fd_step) {
  return field_jacobian(sys.base, x, fd_step) +
         eps * forcing_jacobian(sys, t, x, eps, fd_step);
}

std::vector<std::pair<double, Vec2>> Trajectory::samples() const {
  std::vector<std::pair<double, Vec2>> out;
  out.reserve(dense.size() + 1);
  for (const auto& s : dense.steps()) out.emplace_back(s.t0, s.r1);
  const auto& last = dense.steps().back();
  out.emplace_back(last.t0 + last.h, last.eval(last.t0 + last.h));
  return out;
}

Vec2 flow(const AutonomousSystem& sys, double t, double t0, const Vec2& v,
          const Tolerances& tol) {
  if (t == t0) return v;
  return integrate<2>([&](double, const Vec2& x) { return sys.f(x); }, t0, v,
                      t, tol);
}

Vec2 flow(const PerturbedSystem& sys, double eps, double t, double t0,
          const Vec2& v, const Tolerances& tol) {
  if (t == t0) return v;
  return integrate<2>(
      [&](double tau, const Vec2& x) { return full_field(sys, eps, tau, x); },
      t0, v, t, tol);
}

Trajectory flow_trajectory(const AutonomousSystem& sys, double t, double t0,
                           const Vec2& v, const Tolerances& tol) {
  Trajectory traj;
  integrate<2>([&](double, const Vec2& x) { return sys.f(x); }, t0, v, t, tol,
               &traj.dense);
  return traj;
}

Trajectory flow_trajectory(const PerturbedSystem& sys, double eps, double t,
                           double t0, const Vec2& v, const Tolerances& tol) {
  Trajectory traj;
  integrate<2>(
      [&](double tau, const Vec2& x) { return full_field(sys, eps, tau, x); },
      t0, v, t, tol, &traj.dense);
  return traj;
}

Vec2 VariationalSolution::x(double t) const { return unpack_x(dense.eval(t)); }

Mat2 VariationalSolution::Y(double t) const { return unpack_y(dense.eval(t)); }

namespace {

template <typename FieldF, typename JacF>
VariationalSolution variational_impl(FieldF&& field, JacF&& jac, double t,
                                     double t0, const Vec2& v,
                                     const Tolerances& tol) {
  VariationalSolution sol;
  const auto rhs = [&](double tau, const VecN<6>& z) {
    const Vec2 x = unpack_x(z);
    const Mat2 y = unpack_y(z);
    return pack(field(tau, x), jac(tau, x) * y);
  };
  integrate<6>(rhs, t0, pack(v, Mat2::Identity()), t, tol, &sol.dense);
  return sol;
}

}  // namespace

VariationalSolution variational_trajectory(const AutonomousSystem& sys,
                                           double t, double t0, const Vec2& v,
                                           const Tolerances& tol) {
  return variational_impl(
      [&](double, const Vec2& x) { return sys.f(x); },
      [&](double, const Vec2& x) { return field_jacobian(sys, x, tol.fd_step); },
      t, t0, v, tol);
}

VariationalSolution variational_trajectory(const PerturbedSystem& sys,
                                           double eps, double t, double t0,
                                           const Vec2& v,
                                           const Tolerances& tol) {
  return variational_impl(
      [&](double tau, const Vec2& x) { return full_field(sys, eps, tau, x); },
      [&](double tau, const Vec2& x) {
        return full_field_jacobian(sys, eps, tau, x, tol.fd_step);
      },
      t, t0, v, tol);
}

Mat2 variational_matrix(const AutonomousSystem& sys, double t, double t0,
                        const Vec2& v, const Tolerances& tol) {
  if (t == t0) return Mat2::Identity();
  return variational_trajectory(sys, t, t0, v, tol).Y(t);
}

Mat2 variational_matrix(const PerturbedSystem& sys, double eps, double t,
                        double t0, const Vec2& v, const Tolerances& tol) {
  if (t == t0) return Mat2::Identity();
  return variational_trajectory(sys, eps, t, t0, v, tol).Y(t);
}

double divergence(const AutonomousSystem& sys, const Vec2& x, double fd_step) {
  if (sys.div_f) return sys.div_f(x);
  return field_jacobian(sys, x, fd_step).trace();
}

double divergence(const PerturbedSystem& sys, double t, const Vec2& x,
                  double eps, double fd_step) {
  const double div_g = sys.div_g
                           ? sys.div_g(t, x, eps)
                           : forcing_jacobian(sys, t, x, eps, fd_step).trace();
  return divergence(sys.base, x, fd_step) + eps * div_g;
}

DivergenceCertificate check_divergence_condition(const PerturbedSystem& sys,
                                                 const Rect& region,
                                                 double eps_lo, double eps_hi,
                                                 int nt, int nx, int ne,
                                                 double fd_step) {
  if (region.degenerate())
    throw InvalidParams("check_divergence_condition: degenerate region");
  if (nt < 2 || nx < 2 || ne < 2)
    throw InvalidParams("check_divergence_condition: grid sizes must be >= 2");
  if (!(eps_hi > eps_lo))
    throw InvalidParams("check_divergence_condition: empty eps range");

  DivergenceCertificate cert;
  cert.max_value = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < nt; ++it) {
    const double t = sys.period * it / nt;  // [0, T)
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < nx; ++iy) {
        const Vec2 x(
            region.lo.x() + (region.hi.x() - region.lo.x()) * ix / (nx - 1),
            region.lo.y() + (region.hi.y() - region.lo.y()) * iy / (nx - 1));
        for (int ie = 1; ie <= ne; ++ie) {
          const double eps = eps_lo + (eps_hi - eps_lo) * ie / ne;
          const double d = divergence(sys, t, x, eps, fd_step);
          if (!std::isfinite(d))
            throw NonFiniteField("divergence at sampled grid point");
          if (d > cert.max_value) {
            cert.max_value = d;
            cert.argmax_t = t;
            cert.argmax_x = x;
            cert.argmax_eps = eps;
          }
        }
      }
    }
  }
  cert.holds = cert.max_value < 0.0;
  return cert;
}

std::array<Complex, 2> eigenvalues_2x2(const Mat2& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const double disc = 0.25 * tr * tr - det;
  std::array<Complex, 2> ev;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    ev = {Complex(0.5 * tr + root, 0.0), Complex(0.5 * tr - root, 0.0)};
  } else {
    const double root = std::sqrt(-disc);
    ev = {Complex(0.5 * tr, root), Complex(0.5 * tr, -root)};
  }
  if (std::abs(ev[1]) > std::abs(ev[0])) std::swap(ev[0], ev[1]);
  return ev;
}

std::array<Complex, 2> monodromy_eigenvalues(const AutonomousSystem& sys,
                                             const Vec2& cycle_start, double T,
                                             const Tolerances& tol) {
  const Vec2 back = flow(sys, T, 0.0, cycle_start, tol);
  const double miss = (back - cycle_start).norm();
  const double scale = 1.0 + cycle_start.norm();
  if (miss > 1e-6 * scale)
    throw NotPeriodic("monodromy: |Omega(T,0,v)-v| = " + std::to_string(miss));
  return eigenvalues_2x2(variational_matrix(sys, T, 0.0, cycle_start, tol));
}

}  // namespace cyclecert
