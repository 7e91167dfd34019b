#pragma once

// Flows of one-dimensional vector fields f(x) d/dx.
//
// The unitary exp[i eps sqrt(f) p sqrt(f)] acts on the position operator as
// the time-eps flow phi_eps of f(x) d/dx, i.e. the solution of
//   d phi / d eps = f(phi),  phi_0 = x,
// and on the momentum operator through the weight F2(x) = f(x) / f(phi_eps(x)),
// which is the reciprocal of the flow Jacobian.

#include <functional>
#include <limits>
#include <string>
#include <variant>

namespace canonflow {

struct LinearGenerator {};     // f(x) = x
struct QuadraticGenerator {};  // f(x) = x^2
struct ExpDecayGenerator {     // f(x) = exp(-lambda x), lambda > 0
  double lambda = 1.0;
};
struct CustomGenerator {
  std::function<double(double)> f;
  std::function<double(double)> df;  // optional; finite differences when empty
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::string label = "custom";
};

class GeneratorSpec {
 public:
  using Variant = std::variant<LinearGenerator, QuadraticGenerator,
                               ExpDecayGenerator, CustomGenerator>;

  static GeneratorSpec linear();
  static GeneratorSpec quadratic();
  static GeneratorSpec exp_decay(double lambda);
  static GeneratorSpec custom(std::function<double(double)> f,
                              std::function<double(double)> df = {},
                              double lo = -std::numeric_limits<double>::infinity(),
                              double hi = std::numeric_limits<double>::infinity(),
                              std::string label = "custom");
  static GeneratorSpec constant(double value);

  double value(double x) const;
  double derivative(double x) const;

  bool is_closed_form() const noexcept;
  bool in_validity_interval(double x) const noexcept;
  std::string name() const;
  const Variant& variant() const noexcept { return variant_; }

  // Same f, but evaluated through the adaptive ODE path. Used as the
  // independent oracle for the closed forms.
  GeneratorSpec as_custom() const;

 private:
  explicit GeneratorSpec(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

struct FlowOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double blowup_bound = 1e8;
  int max_steps = 200000;
};

struct FlowEvaluation {
  double x_out = 0.0;     // phi_eps(x)
  double jacobian = 1.0;  // d phi_eps / dx
  double f2 = 1.0;        // F2(x)
  bool domain_ok = false;
};

double flow_map(const GeneratorSpec& f, double eps, double x,
                const FlowOptions& opts = {});
double conjugation_factor(const GeneratorSpec& f, double eps, double x,
                          const FlowOptions& opts = {});
double flow_jacobian(const GeneratorSpec& f, double eps, double x,
                     const FlowOptions& opts = {});

// Evaluates all three quantities at once. Throws DomainBlowup / StepFailure.
FlowEvaluation evaluate_flow(const GeneratorSpec& f, double eps, double x,
                             const FlowOptions& opts = {});

// Non-throwing variant for callers that treat points outside the flow domain
// specially; domain_ok is false when the flow does not exist at x.
FlowEvaluation try_evaluate_flow(const GeneratorSpec& f, double eps, double x,
                                 const FlowOptions& opts = {}) noexcept;

// h(x) such that [{f1,p},{f2,p}] = {-i h, p}; h = 2 f1^2 (f2/f1)'.
// Evaluated as 2 (f1 f2' - f2 f1'), which stays regular where f1 vanishes.
std::function<double(double)> bracket_f3(const GeneratorSpec& f1,
                                         const GeneratorSpec& f2);

}  // namespace canonflow
