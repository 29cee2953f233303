#include "cyclecert/melnikov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cyclecert {

namespace {

constexpr int kQuadCap = 1 << 12;
constexpr double kQuadTarget = 1e-9;

Vec2 adjoint_initial(const Cycle& cycle, AdjointKind which) {
  const Vec2& v = cycle.velocity_start;
  if (which == AdjointKind::A) {
    return v / v.squaredNorm();
  }
  return Vec2(-v.y(), v.x());
}

// Joint state [x; z]: base trajectory plus adjoint weight.
VecN<4> adjoint_rhs(const AutonomousSystem& sys, const VecN<4>& y) {
  const Vec2 x(y[0], y[1]);
  const Vec2 z(y[2], y[3]);
  const Vec2 dx = sys.f(x);
  const Vec2 dz = -(field_jacobian(sys, x).transpose() * z);
  VecN<4> dy;
  dy << dx[0], dx[1], dz[0], dz[1];
  return dy;
}

DenseSolution<4> integrate_adjoint(const AutonomousSystem& sys,
                                   const Cycle& cycle, AdjointKind which,
                                   double horizon, const Tolerances& tol) {
  VecN<4> y0;
  y0 << cycle.start[0], cycle.start[1], adjoint_initial(cycle, which)[0],
      adjoint_initial(cycle, which)[1];
  DenseSolution<4> dense;
  integrate<4>([&](double, const VecN<4>& y) { return adjoint_rhs(sys, y); },
               0.0, y0, horizon, tol, &dense);
  return dense;
}

// Shared quadrature of <z_j(tau), g(tau - theta, x0(tau), 0)> over
// [theta, theta + T]. For kind A the weight is the periodic normalized
// tangent frame; for kind E it reads the adjoint dense solution.
double melnikov_quadrature(const PerturbedSystem& sys, const Cycle& cycle,
                           AdjointKind which, double theta,
                           const DenseSolution<4>* adjoint,
                           const MelnikovConfig& cfg) {
  const double T = cycle.period;
  const auto weight = [&](double tau) -> Vec2 {
    if (which == AdjointKind::A) {
      const Vec2 v = sys.base.f(cycle.at(tau));
      return v / v.squaredNorm();
    }
    const VecN<4> y = adjoint->eval(tau);
    return Vec2(y[2], y[3]);
  };
  const auto integrand = [&](double tau) {
    return weight(tau).dot(sys.g(tau - theta, cycle.at(tau), 0.0));
  };
  const auto simpson = [&](int m) {
    const double h = T / m;
    double acc = integrand(theta) + integrand(theta + T);
    for (int k = 1; k < m; ++k) {
      acc += (k % 2 == 1 ? 4.0 : 2.0) * integrand(theta + k * h);
    }
    return acc * (h / 3.0);
  };
  double prev = simpson(cfg.quad_nodes);
  for (int m = 2 * cfg.quad_nodes; m <= kQuadCap; m *= 2) {
    const double cur = simpson(m);
    if (std::abs(cur - prev) <= kQuadTarget * std::max(1.0, std::abs(cur))) {
      return cur;
    }
    prev = cur;
  }
  return prev;
}

void validate_config(const MelnikovConfig& cfg) {
  if (cfg.quad_nodes < 16 || cfg.quad_nodes % 2 != 0) {
    throw InvalidParams("melnikov quad_nodes must be even and >= 16, got " +
                        std::to_string(cfg.quad_nodes));
  }
  if (!cfg.tol.valid()) {
    throw InvalidParams("melnikov received invalid tolerances");
  }
}

}  // namespace

Vec2 adjoint_solution(const AutonomousSystem& sys, const Cycle& cycle,
                      AdjointKind which, double tau, const Tolerances& tol) {
  if (tau < 0.0 || tau > 2.0 * cycle.period) {
    throw InvalidParams("adjoint_solution supports tau in [0, 2T], got " +
                        std::to_string(tau));
  }
  const Vec2 z0 = adjoint_initial(cycle, which);
  if (tau == 0.0) return z0;
  VecN<4> y0;
  y0 << cycle.start[0], cycle.start[1], z0[0], z0[1];
  const VecN<4> y = integrate<4>(
      [&](double, const VecN<4>& s) { return adjoint_rhs(sys, s); }, 0.0, y0,
      tau, tol);
  return Vec2(y[2], y[3]);
}

double melnikov_function(const PerturbedSystem& sys, const Cycle& cycle,
                         AdjointKind which, double theta,
                         const MelnikovConfig& cfg) {
  validate_config(cfg);
  const double T = cycle.period;
  if (theta < 0.0 || theta > 2.0 * T) {
    throw InvalidParams("melnikov_function supports theta in [0, 2T], got " +
                        std::to_string(theta));
  }
  if (which == AdjointKind::A) {
    return melnikov_quadrature(sys, cycle, which, theta, nullptr, cfg);
  }
  const DenseSolution<4> adjoint =
      integrate_adjoint(sys.base, cycle, which, theta + T, cfg.tol);
  return melnikov_quadrature(sys, cycle, which, theta, &adjoint, cfg);
}

MelnikovProfile melnikov_profile(const PerturbedSystem& sys,
                                 const Cycle& cycle, int n_theta,
                                 const MelnikovConfig& cfg) {
  validate_config(cfg);
  if (n_theta < 32) {
    throw InvalidParams("melnikov_profile requires n_theta >= 32, got " +
                        std::to_string(n_theta));
  }
  const double T = cycle.period;
  const double slope_h = 1e-4 * T;
  // One adjoint integration covers every evaluation the profile needs:
  // theta < T + slope_h, so tau stays below 2T + 2 * slope_h.
  const DenseSolution<4> adjoint = integrate_adjoint(
      sys.base, cycle, AdjointKind::E, 2.0 * T + 2.0 * slope_h, cfg.tol);

  const auto eval_a = [&](double theta) {
    return melnikov_quadrature(sys, cycle, AdjointKind::A, theta, nullptr,
                               cfg);
  };
  const auto eval_e = [&](double theta) {
    return melnikov_quadrature(sys, cycle, AdjointKind::E, theta, &adjoint,
                               cfg);
  };
  // M_E is T-periodic; fold arguments so slope stencils near 0 stay in
  // the integrated range.
  const auto eval_e_folded = [&](double theta) {
    return eval_e(theta < 0.0 ? theta + T : theta);
  };

  MelnikovProfile profile;
  profile.thetas.reserve(static_cast<std::size_t>(n_theta));
  profile.m_a.reserve(static_cast<std::size_t>(n_theta));
  profile.m_e.reserve(static_cast<std::size_t>(n_theta));
  for (int k = 0; k < n_theta; ++k) {
    const double theta = T * static_cast<double>(k) / n_theta;
    profile.thetas.push_back(theta);
    profile.m_a.push_back(eval_a(theta));
    profile.m_e.push_back(eval_e(theta));
  }

  double max_abs = 0.0;
  for (double v : profile.m_e) max_abs = std::max(max_abs, std::abs(v));
  profile.max_abs_e = max_abs;
  profile.slope_floor = 1e-6 * max_abs / T;

  // An identically tiny profile has no usable zero structure.
  const double scale = 1.0 + cycle.start.norm();
  if (max_abs <= 1e-12 * scale) {
    profile.status = ProfileStatus::Degenerate;
    return profile;
  }

  const double node_zero_tol = 1e-7 * max_abs;
  const auto is_node_zero = [&](int k) {
    return std::abs(profile.m_e[static_cast<std::size_t>(k)]) <=
           node_zero_tol;
  };

  bool tangential = false;
  std::vector<double> raw_zeros;
  for (int k = 0; k < n_theta; ++k) {
    const int kn = (k + 1) % n_theta;
    const double a = profile.m_e[static_cast<std::size_t>(k)];
    const double b = profile.m_e[static_cast<std::size_t>(kn)];
    if (is_node_zero(k)) {
      raw_zeros.push_back(profile.thetas[static_cast<std::size_t>(k)]);
      // A node zero whose neighbors agree in sign is a tangency.
      const int kp = (k + n_theta - 1) % n_theta;
      const double before = profile.m_e[static_cast<std::size_t>(kp)];
      if (!is_node_zero(kp) && !is_node_zero(kn) && before * b > 0.0) {
        tangential = true;
      }
      continue;
    }
    if (is_node_zero(kn) || a * b >= 0.0) continue;

    // Sign change inside (theta_k, theta_k + T/n): bisect with a secant
    // proposal on the true function.
    double lo = profile.thetas[static_cast<std::size_t>(k)];
    double hi = lo + T / n_theta;
    double f_lo = a;
    double f_hi = b;
    double root = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      if (f_hi != f_lo) {
        const double secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if (secant > lo + 0.05 * (hi - lo) && secant < hi - 0.05 * (hi - lo)) {
          mid = secant;
        }
      }
      const double f_mid = eval_e(mid);
      root = mid;
      if (std::abs(f_mid) <= 1e-9 * max_abs ||
          hi - lo <= 1e-12 * T) {
        break;
      }
      if (f_lo * f_mid <= 0.0) {
        hi = mid;
        f_hi = f_mid;
      } else {
        lo = mid;
        f_lo = f_mid;
      }
    }
    raw_zeros.push_back(root);
  }

  // Fold into [0, T) and merge duplicates in the circular metric.
  for (double& z : raw_zeros) {
    z = std::fmod(z, T);
    if (z < 0.0) z += T;
  }
  std::sort(raw_zeros.begin(), raw_zeros.end());
  const double merge_tol = 0.5 * T / n_theta;
  std::vector<double> zeros;
  for (double z : raw_zeros) {
    if (!zeros.empty() && z - zeros.back() < merge_tol) continue;
    zeros.push_back(z);
  }
  if (zeros.size() >= 2 &&
      (zeros.front() + T) - zeros.back() < merge_tol) {
    zeros.pop_back();
  }

  for (double z : zeros) {
    const double slope =
        (eval_e_folded(z + slope_h) - eval_e_folded(z - slope_h)) /
        (2.0 * slope_h);
    profile.zeros_e.push_back({z, slope});
  }

  if (tangential) {
    profile.status = ProfileStatus::Degenerate;
  } else if (zeros.empty()) {
    profile.status = ProfileStatus::NoZeros;
  } else if (zeros.size() == 2) {
    profile.status = ProfileStatus::TwoZeros;
    profile.sign_product_a = eval_a(zeros[0]) * eval_a(zeros[1]);
  } else if (zeros.size() == 1) {
    // A lone zero of a continuous periodic function cannot be a
    // transversal crossing; treat it as a tangency.
    profile.status = ProfileStatus::Degenerate;
  } else {
    profile.status = ProfileStatus::MoreThanTwoZeros;
  }
  return profile;
}

DegreeCriterion criterion_degree_0_or_2(const MelnikovProfile& profile) {
  DegreeCriterion result;
  if (profile.status != ProfileStatus::TwoZeros) return result;
  for (const MelnikovZero& z : profile.zeros_e) {
    if (std::abs(z.slope) <= profile.slope_floor) return result;
  }
  if (!(profile.sign_product_a < 0.0)) return result;
  result.applies = true;
  result.conclusion =
      "degree of the negated averaged field over the cycle interior lies "
      "in {0, 2} (in particular it differs from 1)";
  return result;
}

}  // namespace cyclecert
