#ifndef CYCLECERT_TYPES_HPP
#define CYCLECERT_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

/// Planar periodic-orbit certification toolkit.
///
/// Everything lives in phase space R^2; Eigen fixed-size types are used
/// throughout so the 2x2 variational / monodromy algebra stays allocation-free.
namespace cyclecert {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Complex = std::complex<double>;

/// Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y], used for sampling
/// certificates and grids of the averaged field.
struct Rect {
  Vec2 lo;
  Vec2 hi;

  bool degenerate() const { return !(lo.x() < hi.x()) || !(lo.y() < hi.y()); }
};

/// Integration / differentiation control knobs.
///
/// `fd_step` is the base increment for finite-difference Jacobians; the
/// actual step used at a point x is fd_step * (1 + |x|).
struct Tolerances {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double max_step = 1e3;
  double fd_step = 1e-6;

  bool valid() const {
    return abs_tol > 0 && rel_tol > 0 && max_step > 0 && fd_step > 0 &&
           abs_tol <= 1e-6 && rel_tol <= 1e-6;
  }
};

/// Which side of a closed orbit a nearby point or solution sits on.
enum class ApproachSide { inside, outside };

/// Base class for all toolkit errors; `what()` always starts with the
/// machine-readable condition name (e.g. "NoReturn: ...").
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define CYCLECERT_DEFINE_ERROR(Name)                                   \
  struct Name : Error {                                                \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

// Integration
CYCLECERT_DEFINE_ERROR(StepSizeUnderflow);
CYCLECERT_DEFINE_ERROR(NonFiniteField);
// Monodromy / cycles
CYCLECERT_DEFINE_ERROR(NotPeriodic);
CYCLECERT_DEFINE_ERROR(NoReturn);
CYCLECERT_DEFINE_ERROR(TangentialCrossing);
CYCLECERT_DEFINE_ERROR(AmplitudeRootNotBracketed);
// Averaging / degree
CYCLECERT_DEFINE_ERROR(SingularVariational);
CYCLECERT_DEFINE_ERROR(ZeroOnBoundary);
CYCLECERT_DEFINE_ERROR(RefinementExhausted);
// Newton shooting
CYCLECERT_DEFINE_ERROR(NewtonDiverged);
CYCLECERT_DEFINE_ERROR(SingularJacobian);
// Catalog / CLI
CYCLECERT_DEFINE_ERROR(InvalidParams);
CYCLECERT_DEFINE_ERROR(UnknownSystem);
CYCLECERT_DEFINE_ERROR(ConfigError);

#undef CYCLECERT_DEFINE_ERROR

}  // namespace cyclecert

#endif  // CYCLECERT_TYPES_HPP
