#ifndef CYCLECERT_BUILTIN_SYSTEMS_HPP
#define CYCLECERT_BUILTIN_SYSTEMS_HPP

#include <map>
#include <string>
#include <vector>

#include "cyclecert/ode_core.hpp"

namespace cyclecert {

/// Forced Duffing oscillator in slow form: f == 0 and
///   g(t, x, eps) = (x2, -c x2 - eps a x1 - b x1^3 + gamma cos(omega t)),
/// so that eps*g is the full right-hand side. The eps*a term sits inside
/// g's eps slot on purpose: at eps = 0 the forcing keeps exactly the terms
/// that enter the first-order averaged field. This is the subtlest modeling
/// choice in the repo — see make_duffing.
struct DuffingParams {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  double gamma = 1.0;
  double omega = 1.0;
};

/// Rotationally symmetric field with an amplitude-dependent angular speed
///   f(x) = Phi(x) * (x2, -x1),   Phi(x) = (1/4)(x1^2 + x2^2 - 2)^p + 1,
/// forced by g(t, x, eps) = (0, -eps x2 + sin t). Every circle |x| = alpha
/// is a cycle of period 2*pi / Phi; at alpha = sqrt(2) the period equals
/// the forcing period 2*pi and the first p-1 derivatives of the period
/// function vanish (fully degenerate resonance for p >= 2).
struct DegenerateCycleParams {
  int p = 2;
};

/// Builds the Duffing system with analytic Jacobians; divergence is the
/// constant -eps*c. Throws InvalidParams unless all parameters are > 0.
PerturbedSystem make_duffing(const DuffingParams& params = {});

/// Builds the degenerate-cycle system with analytic Jacobians; the
/// unperturbed field is divergence-free, the full divergence is -eps^2.
/// Throws InvalidParams unless p >= 1.
PerturbedSystem make_degenerate_cycle(const DegenerateCycleParams& params = {});

/// Harmonic oscillator f = (x2, -x1), g == 0: isochronous calibration
/// field (every orbit is 2*pi-periodic).
PerturbedSystem make_harmonic();

/// Pure contraction x' = eps * (-x) (f == 0, g = -x): sanity field for
/// the attractor probe and the stroboscopic map.
PerturbedSystem make_linear_contract();

/// Catalog entry for the named systems exposed to the CLI.
struct ParamSpec {
  std::string key;
  double default_value;
};

struct SystemInfo {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
};

/// Stable catalog: "duffing-ex1", "degenerate-cycle-ex2", "harmonic",
/// "linear-contract".
const std::vector<SystemInfo>& list_systems();

/// Instantiates a catalog system by name with parameter overrides.
/// Throws UnknownSystem for names outside the catalog and InvalidParams
/// for unknown keys or out-of-range values.
PerturbedSystem make_system(const std::string& name,
                            const std::map<std::string, double>& params = {});

}  // namespace cyclecert

#endif  // CYCLECERT_BUILTIN_SYSTEMS_HPP
