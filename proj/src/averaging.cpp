#include "cyclecert/averaging.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace cyclecert {

namespace {

constexpr double kDetFloor = 1e-12;
constexpr double kQuadTarget = 1e-9;
constexpr int kMaxSubintervals = 1 << 14;

}  // namespace

Vec2 averaging_function(const PerturbedSystem& sys, const Vec2& v,
                        const AveragingConfig& cfg) {
  if (cfg.quad_nodes < 16 || cfg.quad_nodes % 2 != 0) {
    throw InvalidParams("averaging quad_nodes must be even and >= 16, got " +
                        std::to_string(cfg.quad_nodes));
  }
  if (!cfg.tol.valid()) {
    throw InvalidParams("averaging received invalid tolerances");
  }
  const double T = sys.period;
  const VariationalSolution var =
      variational_trajectory(sys.base, T, 0.0, v, cfg.tol);

  const auto integrand = [&](double tau) -> Vec2 {
    const Mat2 Y = var.Y(tau);
    const double det = Y.determinant();
    if (std::abs(det) < kDetFloor) {
      throw SingularVariational(
          "fundamental matrix determinant " + std::to_string(det) +
          " at tau = " + std::to_string(tau) +
          " is below the invertibility floor");
    }
    Mat2 Yinv;
    Yinv << Y(1, 1), -Y(0, 1), -Y(1, 0), Y(0, 0);
    Yinv /= det;
    return Yinv * sys.g(tau, var.x(tau), 0.0);
  };

  // Composite Simpson with m subintervals, fixed summation order so grid
  // and pointwise evaluations agree bit for bit.
  const auto simpson = [&](int m) -> Vec2 {
    const double h = T / m;
    Vec2 acc = integrand(0.0) + integrand(T);
    for (int k = 1; k < m; ++k) {
      acc += (k % 2 == 1 ? 4.0 : 2.0) * integrand(k * h);
    }
    return acc * (h / 3.0);
  };

  Vec2 prev = simpson(cfg.quad_nodes);
  for (int m = 2 * cfg.quad_nodes; m <= kMaxSubintervals; m *= 2) {
    const Vec2 cur = simpson(m);
    if ((cur - prev).cwiseAbs().maxCoeff() < kQuadTarget) return cur;
    prev = cur;
  }
  return prev;
}

AveragedField averaging_on_grid(const PerturbedSystem& sys, const Rect& region,
                                int n, const AveragingConfig& cfg) {
  if (n < 1) throw InvalidParams("averaging_on_grid requires n >= 1");
  AveragedField field;
  field.region = region;
  field.n = n;
  field.points.reserve(static_cast<std::size_t>(n) * n);
  field.values.reserve(static_cast<std::size_t>(n) * n);

  const auto coord = [&](double lo, double hi, int i) {
    if (n == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  };
  // Coincident grid points (degenerate regions) share one evaluation.
  std::map<std::pair<double, double>, Vec2> cache;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 p(coord(region.lo.x(), region.hi.x(), i),
                   coord(region.lo.y(), region.hi.y(), j));
      const auto key = std::make_pair(p.x(), p.y());
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache.emplace(key, averaging_function(sys, p, cfg)).first;
      }
      field.points.push_back(p);
      field.values.push_back(it->second);
    }
  }
  return field;
}

}  // namespace cyclecert
