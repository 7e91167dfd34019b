#include "canonflow/flowcore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "canonflow/error.hpp"

namespace canonflow {
namespace {

constexpr const char* kModule = "flowcore";

[[noreturn]] void blowup(const std::string& what) {
  throw Error(ErrorKind::DomainBlowup, kModule, what);
}

std::string describe(double eps, double x) {
  std::ostringstream os;
  os.precision(17);
  os << "eps=" << eps << ", x=" << x;
  return os.str();
}

// Five-point central difference; step scaled to |x|.
double numeric_derivative(const std::function<double(double)>& f, double x) {
  const double h = 1e-3 * std::max(1.0, std::abs(x));
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

// State of the augmented system: position and the variational Jacobian.
struct FlowState {
  double phi;
  double jac;
};

// Dormand-Prince 5(4) with FSAL, integrating d/ds (phi, J) = (f(phi), f'(phi) J)
// from s = 0 to s = eps.
FlowState integrate_custom(const CustomGenerator& g, double eps, double x,
                           const FlowOptions& opts) {
  auto deriv = [&](const FlowState& y) {
    const double slack_lo = 1e-12 * (1.0 + std::abs(g.lo)), slack_hi = 1e-12 * (1.0 + std::abs(g.hi));
    if (!(y.phi >= g.lo - slack_lo && y.phi <= g.hi + slack_hi)) {
      blowup("flow left the validity interval of " + g.label);
    }
    const double fv = g.f(y.phi);
    const double dfv = g.df ? g.df(y.phi) : numeric_derivative(g.f, y.phi);
    return FlowState{fv, dfv * y.jac};
  };

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
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  FlowState y{x, 1.0};
  if (eps == 0.0) return y;

  const double dir = eps > 0 ? 1.0 : -1.0;
  const double span = std::abs(eps);
  double s = 0.0;
  FlowState k1 = deriv(y);
  double h = std::min(span, 1e-2 * span + 1e-3);
  {
    // Initial step from the local time scale of the field.
    const double scale = std::abs(k1.phi) + std::abs(k1.jac) * 1e-3;
    if (scale > 0) h = std::min(h, 0.01 * (std::abs(y.phi) + 1.0) / scale);
    h = std::max(h, 1e-12 * span);
  }

  auto axpy = [](const FlowState& base, std::initializer_list<std::pair<double, const FlowState*>> terms,
                 double step) {
    FlowState r = base;
    for (const auto& [c, k] : terms) {
      r.phi += step * c * k->phi;
      r.jac += step * c * k->jac;
    }
    return r;
  };

  for (int step = 0; step < opts.max_steps; ++step) {
    if (s >= span) return y;
    h = std::min(h, span - s);
    const double hs = dir * h;
    FlowState k2, k3, k4, k5, k6, k7, y5;
    try {
      k2 = deriv(axpy(y, {{a21, &k1}}, hs));
      k3 = deriv(axpy(y, {{a31, &k1}, {a32, &k2}}, hs));
      k4 = deriv(axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, hs));
      k5 = deriv(axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, hs));
      k6 = deriv(axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, hs));
      y5 = axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, hs);
      k7 = deriv(y5);
    } catch (const Error&) {
      // A trial stage left the validity interval; retry with a smaller step
      // unless the step is already negligible or the orbit is pinned
      // against the edge it is heading for.
      const double edge = dir * k1.phi > 0 ? g.hi : g.lo;
      const bool pinned = std::abs(edge - y.phi) <= 1e-9 * (1.0 + std::abs(edge));
      if (h < 1e-14 * span || pinned) throw;
      h *= 0.25;
      continue;
    }
    const double err_phi = hs * (e1 * k1.phi + e3 * k3.phi + e4 * k4.phi +
                                 e5 * k5.phi + e6 * k6.phi + e7 * k7.phi);
    const double err_jac = hs * (e1 * k1.jac + e3 * k3.jac + e4 * k4.jac +
                                 e5 * k5.jac + e6 * k6.jac + e7 * k7.jac);
    const double sc_phi =
        opts.atol + opts.rtol * std::max(std::abs(y.phi), std::abs(y5.phi));
    const double sc_jac =
        opts.atol + opts.rtol * std::max(std::abs(y.jac), std::abs(y5.jac));
    const double err =
        std::max(std::abs(err_phi) / sc_phi, std::abs(err_jac) / sc_jac);
    if (!std::isfinite(err)) {
      h *= 0.25;
      if (h < 1e-14 * span) blowup("non-finite flow near " + describe(eps, x));
      continue;
    }
    if (err <= 1.0) {
      s += h;
      y = y5;
      k1 = k7;
      if (std::abs(y.phi) > opts.blowup_bound) {
        blowup("flow escaped past |phi| > " + std::to_string(opts.blowup_bound) +
               " at " + describe(eps, x));
      }
    }
    const double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
    h *= std::clamp(fac, 0.2, 5.0);
    if (h < 1e-14 * span && s < span) {
      blowup("step size collapsed (finite-eps escape) at " + describe(eps, x));
    }
  }
  throw Error(ErrorKind::StepFailure, kModule,
              "adaptive flow integration exceeded max_steps at " + describe(eps, x));
}

FlowEvaluation evaluate_closed(const LinearGenerator&, double eps, double x) {
  const double e = std::exp(eps);
  return {e * x, e, 1.0 / e, true};
}

FlowEvaluation evaluate_closed(const QuadraticGenerator&, double eps, double x) {
  const double w = 1.0 - eps * x;
  if (!(w > 0.0)) blowup("quadratic flow requires eps*x < 1; " + describe(eps, x));
  return {x / w, 1.0 / (w * w), w * w, true};
}

FlowEvaluation evaluate_closed(const ExpDecayGenerator& g, double eps, double x) {
  const double lam = g.lambda;
  // phi = ln(e^{lam x} + eps lam) / lam, written as x + log1p(eps lam e^{-lam x}) / lam.
  const double q = eps * lam * std::exp(-lam * x);
  if (!(q > -1.0)) {
    blowup("exp-decay flow requires exp(lambda x) + eps lambda > 0; " + describe(eps, x));
  }
  const double f2 = 1.0 + q;
  return {x + std::log1p(q) / lam, 1.0 / f2, f2, true};
}

FlowEvaluation evaluate_closed(const CustomGenerator& g, double eps, double x,
                               const FlowOptions& opts) {
  if (!(x >= g.lo && x <= g.hi)) {
    blowup("x outside the validity interval of " + g.label + "; " + describe(eps, x));
  }
  const FlowState st = integrate_custom(g, eps, x, opts);
  if (!(st.jac > 0.0)) {
    throw Error(ErrorKind::StepFailure, kModule,
                "non-positive flow Jacobian at " + describe(eps, x));
  }
  const double fx = g.f(x);
  double f2;
  if (fx == 0.0) {
    // Fixed point: F2 = exp(-eps f'(x0)).
    const double d = g.df ? g.df(x) : numeric_derivative(g.f, x);
    f2 = std::exp(-eps * d);
  } else {
    const double fphi = g.f(st.phi);
    f2 = fphi != 0.0 ? fx / fphi : 1.0 / st.jac;
  }
  return {st.phi, st.jac, f2, true};
}

}  // namespace

GeneratorSpec GeneratorSpec::linear() { return GeneratorSpec(LinearGenerator{}); }
GeneratorSpec GeneratorSpec::quadratic() { return GeneratorSpec(QuadraticGenerator{}); }

GeneratorSpec GeneratorSpec::exp_decay(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "exp-decay generator needs lambda > 0");
  }
  return GeneratorSpec(ExpDecayGenerator{lambda});
}

GeneratorSpec GeneratorSpec::custom(std::function<double(double)> f,
                                    std::function<double(double)> df, double lo,
                                    double hi, std::string label) {
  if (!f) throw Error(ErrorKind::InvalidArgument, kModule, "custom generator without f");
  if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, kModule, "empty validity interval");
  return GeneratorSpec(CustomGenerator{std::move(f), std::move(df), lo, hi, std::move(label)});
}

GeneratorSpec GeneratorSpec::constant(double value) {
  return custom([value](double) { return value; }, [](double) { return 0.0; },
                -std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(), "constant");
}

double GeneratorSpec::value(double x) const {
  struct V {
    double x;
    double operator()(const LinearGenerator&) const { return x; }
    double operator()(const QuadraticGenerator&) const { return x * x; }
    double operator()(const ExpDecayGenerator& g) const { return std::exp(-g.lambda * x); }
    double operator()(const CustomGenerator& g) const { return g.f(x); }
  };
  return std::visit(V{x}, variant_);
}

double GeneratorSpec::derivative(double x) const {
  struct D {
    double x;
    double operator()(const LinearGenerator&) const { return 1.0; }
    double operator()(const QuadraticGenerator&) const { return 2.0 * x; }
    double operator()(const ExpDecayGenerator& g) const {
      return -g.lambda * std::exp(-g.lambda * x);
    }
    double operator()(const CustomGenerator& g) const {
      return g.df ? g.df(x) : numeric_derivative(g.f, x);
    }
  };
  return std::visit(D{x}, variant_);
}

bool GeneratorSpec::is_closed_form() const noexcept {
  return !std::holds_alternative<CustomGenerator>(variant_);
}

bool GeneratorSpec::in_validity_interval(double x) const noexcept {
  if (const auto* c = std::get_if<CustomGenerator>(&variant_)) {
    return x >= c->lo && x <= c->hi;
  }
  return std::isfinite(x);
}

std::string GeneratorSpec::name() const {
  struct N {
    std::string operator()(const LinearGenerator&) const { return "linear"; }
    std::string operator()(const QuadraticGenerator&) const { return "quadratic"; }
    std::string operator()(const ExpDecayGenerator& g) const {
      std::ostringstream os;
      os << "expdecay(lambda=" << g.lambda << ")";
      return os.str();
    }
    std::string operator()(const CustomGenerator& g) const { return g.label; }
  };
  return std::visit(N{}, variant_);
}

GeneratorSpec GeneratorSpec::as_custom() const {
  if (std::holds_alternative<CustomGenerator>(variant_)) return *this;
  GeneratorSpec self = *this;
  return custom([self](double x) { return self.value(x); },
                [self](double x) { return self.derivative(x); },
                -std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(), name() + "/ode");
}

FlowEvaluation evaluate_flow(const GeneratorSpec& f, double eps, double x,
                             const FlowOptions& opts) {
  if (!std::isfinite(eps) || !std::isfinite(x)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "non-finite input; " + describe(eps, x));
  }
  return std::visit(
      [&](const auto& g) -> FlowEvaluation {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, CustomGenerator>) {
          return evaluate_closed(g, eps, x, opts);
        } else {
          return evaluate_closed(g, eps, x);
        }
      },
      f.variant());
}

FlowEvaluation try_evaluate_flow(const GeneratorSpec& f, double eps, double x,
                                 const FlowOptions& opts) noexcept {
  try {
    return evaluate_flow(f, eps, x, opts);
  } catch (...) {
    return FlowEvaluation{x, 1.0, 1.0, false};
  }
}

double flow_map(const GeneratorSpec& f, double eps, double x, const FlowOptions& opts) {
  return evaluate_flow(f, eps, x, opts).x_out;
}

double conjugation_factor(const GeneratorSpec& f, double eps, double x,
                          const FlowOptions& opts) {
  return evaluate_flow(f, eps, x, opts).f2;
}

double flow_jacobian(const GeneratorSpec& f, double eps, double x,
                     const FlowOptions& opts) {
  return evaluate_flow(f, eps, x, opts).jacobian;
}

std::function<double(double)> bracket_f3(const GeneratorSpec& f1, const GeneratorSpec& f2) {
  return [f1, f2](double x) {
    return 2.0 * (f1.value(x) * f2.derivative(x) - f2.value(x) * f1.derivative(x));
  };
}

}  // namespace canonflow
