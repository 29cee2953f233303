#include "cyclecert/builtin_systems.hpp"

#include <cmath>

namespace cyclecert {

namespace {

double ipow(double base, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= base;
  return r;
}

}  // namespace

PerturbedSystem make_duffing(const DuffingParams& params) {
  if (!(params.a > 0 && params.b > 0 && params.c > 0 && params.gamma > 0 &&
        params.omega > 0))
    throw InvalidParams("duffing-ex1 requires a, b, c, gamma, omega > 0");
  const auto [a, b, c, gamma, omega] = params;

  PerturbedSystem sys;
  sys.base.f = [](const Vec2&) { return Vec2::Zero().eval(); };
  sys.base.jac_f = [](const Vec2&) { return Mat2::Zero().eval(); };
  sys.base.div_f = [](const Vec2&) { return 0.0; };
  sys.g = [=](double t, const Vec2& x, double eps) {
    return Vec2(x(1), -c * x(1) - eps * a * x(0) - b * x(0) * x(0) * x(0) +
                          gamma * std::cos(omega * t));
  };
  sys.jac_g = [=](double, const Vec2& x, double eps) {
    Mat2 j;
    j << 0.0, 1.0, -eps * a - 3.0 * b * x(0) * x(0), -c;
    return j;
  };
  sys.div_g = [=](double, const Vec2&, double) { return -c; };
  sys.period = 2.0 * M_PI / omega;
  sys.eps_max = 0.1;
  return sys;
}

PerturbedSystem make_degenerate_cycle(const DegenerateCycleParams& params) {
  if (params.p < 1)
    throw InvalidParams("degenerate-cycle-ex2 requires integer p >= 1");
  const int p = params.p;

  const auto phi = [p](const Vec2& x) {
    return 0.25 * ipow(x.squaredNorm() - 2.0, p) + 1.0;
  };
  // gradient of phi: (p/2) * x_i * (|x|^2 - 2)^(p-1)
  const auto phi_grad = [p](const Vec2& x) {
    const double wp = ipow(x.squaredNorm() - 2.0, p - 1);
    return (0.5 * p * wp * x).eval();
  };

  PerturbedSystem sys;
  sys.base.f = [phi](const Vec2& x) {
    return (phi(x) * Vec2(x(1), -x(0))).eval();
  };
  sys.base.jac_f = [phi, phi_grad](const Vec2& x) {
    const double P = phi(x);
    const Vec2 G = phi_grad(x);
    Mat2 j;
    j << x(1) * G(0), P + x(1) * G(1), -P - x(0) * G(0), -x(0) * G(1);
    return j;
  };
  sys.base.div_f = [](const Vec2&) { return 0.0; };  // exact: trace cancels
  sys.g = [](double t, const Vec2& x, double eps) {
    return Vec2(0.0, -eps * x(1) + std::sin(t));
  };
  sys.jac_g = [](double, const Vec2&, double eps) {
    Mat2 j;
    j << 0.0, 0.0, 0.0, -eps;
    return j;
  };
  sys.div_g = [](double, const Vec2&, double eps) { return -eps; };
  sys.period = 2.0 * M_PI;
  sys.eps_max = 0.2;
  return sys;
}

PerturbedSystem make_harmonic() {
  PerturbedSystem sys;
  sys.base.f = [](const Vec2& x) { return Vec2(x(1), -x(0)); };
  sys.base.jac_f = [](const Vec2&) {
    Mat2 j;
    j << 0.0, 1.0, -1.0, 0.0;
    return j;
  };
  sys.base.div_f = [](const Vec2&) { return 0.0; };
  sys.g = [](double, const Vec2&, double) { return Vec2::Zero().eval(); };
  sys.jac_g = [](double, const Vec2&, double) { return Mat2::Zero().eval(); };
  sys.div_g = [](double, const Vec2&, double) { return 0.0; };
  sys.period = 2.0 * M_PI;
  sys.eps_max = 0.1;
  return sys;
}

PerturbedSystem make_linear_contract() {
  PerturbedSystem sys;
  sys.base.f = [](const Vec2&) { return Vec2::Zero().eval(); };
  sys.base.jac_f = [](const Vec2&) { return Mat2::Zero().eval(); };
  sys.base.div_f = [](const Vec2&) { return 0.0; };
  sys.g = [](double, const Vec2& x, double) { return (-x).eval(); };
  sys.jac_g = [](double, const Vec2&, double) {
    return (-Mat2::Identity()).eval();
  };
  sys.div_g = [](double, const Vec2&, double) { return -2.0; };
  sys.period = 2.0 * M_PI;
  sys.eps_max = 1.0;
  return sys;
}

const std::vector<SystemInfo>& list_systems() {
  static const std::vector<SystemInfo> catalog = {
      {"duffing-ex1",
       "forced Duffing oscillator in slow form (f == 0); averaged field "
       "2*pi/omega * (v2, -b v1^3 - c v2)",
       {{"a", 1.0}, {"b", 1.0}, {"c", 1.0}, {"gamma", 1.0}, {"omega", 1.0}}},
      {"degenerate-cycle-ex2",
       "rotationally symmetric cycles with degenerate period function at "
       "amplitude sqrt(2); forcing (0, -eps x2 + sin t)",
       {{"p", 2.0}}},
      {"harmonic",
       "harmonic oscillator, unforced (isochronous calibration field)",
       {}},
      {"linear-contract", "pure contraction x' = -eps x (probe sanity field)",
       {}},
  };
  return catalog;
}

PerturbedSystem make_system(const std::string& name,
                            const std::map<std::string, double>& params) {
  const SystemInfo* info = nullptr;
  for (const auto& entry : list_systems())
    if (entry.name == name) info = &entry;
  if (!info) throw UnknownSystem("\"" + name + "\" is not in the catalog");

  for (const auto& [key, value] : params) {
    bool known = false;
    for (const auto& spec : info->params) known = known || spec.key == key;
    if (!known)
      throw InvalidParams("system \"" + name + "\" has no parameter \"" + key +
                          "\"");
    if (!std::isfinite(value))
      throw InvalidParams("parameter \"" + key + "\" is not finite");
  }
  const auto get = [&](const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };

  if (name == "duffing-ex1") {
    DuffingParams dp;
    dp.a = get("a", dp.a);
    dp.b = get("b", dp.b);
    dp.c = get("c", dp.c);
    dp.gamma = get("gamma", dp.gamma);
    dp.omega = get("omega", dp.omega);
    return make_duffing(dp);
  }
  if (name == "degenerate-cycle-ex2") {
    const double p = get("p", 2.0);
    if (p != std::rint(p))
      throw InvalidParams("parameter \"p\" must be a positive integer");
    return make_degenerate_cycle({static_cast<int>(p)});
  }
  if (name == "harmonic") return make_harmonic();
  return make_linear_contract();
}

}  // namespace cyclecert
