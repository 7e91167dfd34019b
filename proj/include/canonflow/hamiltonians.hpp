#pragma once

// Coefficient algebra for quadratic Hamiltonians
//   H = a p^2 + b x^2 + (c/2){x, p}
// under the dilation exp[i eps {x,p}/2] and the quadratic phase
// exp[-i chi x^2 / 2], plus the exactly solvable mass family.

#include <functional>
#include <optional>

#include "canonflow/banded.hpp"
#include "canonflow/flowcore.hpp"
#include "canonflow/gridspace.hpp"

namespace canonflow {

struct QuadraticHamiltonian {
  double a = 0.0;  // p^2
  double b = 0.0;  // x^2
  double c = 0.0;  // (1/2){x,p}

  static QuadraticHamiltonian standard_oscillator(double mass, double omega) {
    return {0.5 / mass, 0.5 * mass * omega * omega, 0.0};
  }
  QuadraticHamiltonian operator+(const QuadraticHamiltonian& o) const {
    return {a + o.a, b + o.b, c + o.c};
  }
  bool operator==(const QuadraticHamiltonian&) const = default;
  Observable as_observable() const { return Observable::quadratic(a, b, c); }
};

struct Derivatives {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// A real function of time together with its first two derivatives.
class TimeProfile {
 public:
  using Evaluator = std::function<Derivatives(double)>;

  static TimeProfile constant(double value);
  static TimeProfile exponential(double initial, double rate);  // initial * e^{rate t}
  static TimeProfile closed_form(Evaluator eval);
  /// Derivatives by 4th-order central differences with h = 1e-4 * timescale.
  static TimeProfile sampled(std::function<double(double)> fn, double timescale = 1.0);

  Derivatives at(double t) const { return eval_(t); }
  double value(double t) const { return eval_(t).value; }

 private:
  explicit TimeProfile(Evaluator e) : eval_(std::move(e)) {}
  Evaluator eval_;
};

struct MassProfile {
  TimeProfile profile;
  Derivatives at(double t) const;  // validates m > 0
};

struct FrequencyProfile {
  TimeProfile profile;
  Derivatives at(double t) const { return profile.at(t); }
};

/// eps(t) = (1/2) ln(m_ref / m(t)) so that m e^{2 eps} = m_ref, with
/// chi(t) = m_ref * deps/dt the quadratic-phase parameter.
struct EpsilonProfile {
  MassProfile mass;
  double m_ref;

  Derivatives at(double t) const;
  double chi(double t) const;
  double chi_dot(double t) const;
};

/// m(t) = m0 (mu e^{alpha t} + nu e^{-alpha t})^2, frequency omega^2 = Omega0^2 + alpha^2.
/// With `oscillatory` set, alpha is read as beta in the extension
/// m(t) = m0 (mu cos(beta t) + nu sin(beta t))^2, omega^2 = Omega0^2 - beta^2.
struct SolvableFamily {
  double m0 = 1.0;
  double mu = 1.0;
  double nu = 0.0;
  double alpha = 0.0;
  double Omega0 = 1.0;
  bool oscillatory = false;

  static SolvableFamily caldirola_kanai(double m0, double gamma, double Omega0);

  void validate() const;
  double alpha_squared() const { return oscillatory ? -alpha * alpha : alpha * alpha; }
  double omega() const;  // constant frequency of the original oscillator
  MassProfile mass_profile() const;
  FrequencyProfile frequency_profile() const;
};

QuadraticHamiltonian dilation_transform(const QuadraticHamiltonian& h, double eps, double deps);
QuadraticHamiltonian quadratic_phase_transform(const QuadraticHamiltonian& h, double chi,
                                               double dchi);

/// Omega(t) = sqrt(eps'' - eps'^2 + omega^2) with eps = (1/2) ln(m_ref / m).
double effective_frequency(const MassProfile& m, const FrequencyProfile& omega, double t);

/// omega(t) = sqrt(Omega0^2 + m''/(2m) - (m'/(2m))^2).
double omega_from_mass(const MassProfile& m, double Omega0, double t);

/// m(t) and its first two derivatives; throws MassZeroCrossing when the
/// bracket mu e^{alpha t} + nu e^{-alpha t} vanishes.
Derivatives solvable_mass(const SolvableFamily& family, double t);

/// Residual eps'' - eps'^2 + alpha^2 for the family's eps(t).
double solvability_residual(const SolvableFamily& family, double t);

/// Dilation with eps = (1/2) ln(m_ref / m(t)) followed by the quadratic phase
/// with chi = m_ref eps', applied to the oscillator p^2/2m + m omega^2 x^2/2.
QuadraticHamiltonian reduced_hamiltonian(const MassProfile& m, const FrequencyProfile& omega,
                                         double t, double m_ref);

/// H = p^2 / 2m + V(x).
struct StandardHamiltonian {
  double mass = 1.0;
  std::function<double(double)> potential;  // empty means V = 0
  std::optional<double> harmonic_b;         // set when V = b x^2
};

/// Description of H' = H(x', p') - (eps'/2){f, p} for a general generator:
///   (1/2m) sqrt(F2) p F2 p sqrt(F2) + V(F1(x)) - (eps'/2){f(x), p}.
class TransformedOperator {
 public:
  TransformedOperator(StandardHamiltonian h, GeneratorSpec f, double eps, double deps);

  double f2(double x) const;                // momentum weight F2
  double transformed_potential(double x) const;  // V(F1(x))

  /// Action on a grid state with spectral derivatives.
  WaveFunction apply(const WaveFunction& psi) const;

  /// Finite-difference assembly with the same sandwich ordering as the
  /// curved-metric Hamiltonian.
  BandedMatrix assemble(const Grid& grid, int order = kDefaultStencilOrder) const;

  /// Coefficients when f = x and V is harmonic.
  std::optional<QuadraticHamiltonian> as_quadratic() const;

 private:
  StandardHamiltonian h_;
  GeneratorSpec f_;
  double eps_;
  double deps_;
};

TransformedOperator general_f_transform(const StandardHamiltonian& h, const GeneratorSpec& f,
                                        double eps, double deps);

}  // namespace canonflow
