#ifndef CYCLECERT_INTEGRATE_HPP
#define CYCLECERT_INTEGRATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cyclecert/types.hpp"

namespace cyclecert {

template <int N>
using VecN = Eigen::Matrix<double, N, 1>;

/// One accepted integrator step with the coefficients of the quartic
/// interpolant, valid on [t0, t0+h] (h may be negative).
template <int N>
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  VecN<N> r1, r2, r3, r4, r5;

  VecN<N> eval(double t) const {
    if (h == 0.0) return r1;
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
  }
};

/// Piecewise interpolant produced by `integrate`; spans [t_begin, t_end]
/// in either time direction and evaluates in O(log n_steps).
template <int N>
class DenseSolution {
 public:
  void push(const DenseStep<N>& step) { steps_.push_back(step); }
  void clear() { steps_.clear(); }
  bool empty() const { return steps_.empty(); }
  std::size_t size() const { return steps_.size(); }
  const std::vector<DenseStep<N>>& steps() const { return steps_; }

  double t_begin() const { return steps_.front().t0; }
  double t_end() const { return steps_.back().t0 + steps_.back().h; }

  /// Interpolates the solution; t is clamped to the covered span.
  VecN<N> eval(double t) const {
    const bool fwd = t_end() >= t_begin();
    // binary search for the step whose interval contains t
    std::size_t lo = 0, hi = steps_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      const double end = steps_[mid].t0 + steps_[mid].h;
      if (fwd ? (t <= end) : (t >= end))
        hi = mid;
      else
        lo = mid + 1;
    }
    return steps_[lo].eval(t);
  }

 private:
  std::vector<DenseStep<N>> steps_;
};

/// Dormand-Prince 5(4) embedded Runge-Kutta with the classical quartic
/// continuous extension. `rhs(t, y)` must return the state derivative.
/// Integrates from (t0, y0) to t1 (backward if t1 < t0) and returns y(t1);
/// if `dense` is non-null it receives every accepted step.
///
/// Throws NonFiniteField if the field produces NaN/Inf, StepSizeUnderflow
/// if error control collapses the step (stiffness / blow-up).
template <int N, typename Rhs>
VecN<N> integrate(Rhs&& rhs, double t0, const VecN<N>& y0, double t1,
                  const Tolerances& tol, DenseSolution<N>* dense = nullptr) {
  // Butcher tableau
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat (5th-order weights minus embedded 4th-order weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  // dense-output weights
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0,
                          d7 = 69997945.0 / 29380423.0;

  if (dense) dense->clear();

  if (t1 == t0) {
    if (dense) {
      DenseStep<N> s;
      s.t0 = t0;
      s.r1 = y0;
      s.r2 = s.r3 = s.r4 = s.r5 = VecN<N>::Zero();
      dense->push(s);
    }
    return y0;
  }

  const double dir = (t1 > t0) ? 1.0 : -1.0;
  double t = t0;
  VecN<N> y = y0;
  VecN<N> k1 = rhs(t, y);
  if (!k1.allFinite()) throw NonFiniteField("at t=" + std::to_string(t));

  // initial step: modest fraction of the span, bounded by the field scale
  double h = dir * std::min({std::abs(t1 - t0), tol.max_step,
                             0.01 * (1.0 + y.norm()) / (1e-8 + k1.norm())});

  std::int64_t n_steps = 0;
  bool last = false;
  while (!last) {
    if (++n_steps > 10'000'000)
      throw StepSizeUnderflow("step budget exhausted at t=" +
                              std::to_string(t));
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
      throw StepSizeUnderflow("h=" + std::to_string(h) +
                              " at t=" + std::to_string(t));
    if (dir * (t + h - t1) >= 0.0) {
      h = t1 - t;
      last = true;
    }

    const VecN<N> k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const VecN<N> k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const VecN<N> k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const VecN<N> k5 =
        rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const VecN<N> k6 = rhs(
        t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const VecN<N> y1 =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const VecN<N> k7 = rhs(t + h, y1);  // FSAL
    if (!k2.allFinite() || !k3.allFinite() || !k4.allFinite() ||
        !k5.allFinite() || !k6.allFinite() || !k7.allFinite() ||
        !y1.allFinite())
      throw NonFiniteField("at t=" + std::to_string(t));

    const VecN<N> err_vec =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0.0;
    for (int i = 0; i < N; ++i) {
      const double sc =
          tol.abs_tol +
          tol.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
      const double q = err_vec[i] / sc;
      err += q * q;
    }
    err = std::sqrt(err / N);

    if (err <= 1.0) {
      if (dense) {
        DenseStep<N> s;
        s.t0 = t;
        s.h = h;
        s.r1 = y;
        s.r2 = y1 - y;
        s.r3 = h * k1 - s.r2;
        s.r4 = s.r2 - h * k7 - s.r3;
        s.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        dense->push(s);
      }
      t += h;
      y = y1;
      k1 = k7;
    } else {
      last = false;
    }

    const double fac =
        std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
    h *= fac;
    if (std::abs(h) > tol.max_step) h = dir * tol.max_step;
  }
  return y;
}

}  // namespace cyclecert

#endif  // CYCLECERT_INTEGRATE_HPP
