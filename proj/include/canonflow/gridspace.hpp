#pragma once

// Uniform-grid wavefunctions and the position-space action of the canonical
// transformations on states.
//
// Sign conventions. The operator identities are Heisenberg-picture maps:
//   U x U^dagger = phi_eps(x),     U p U^dagger = sqrt(F2) p sqrt(F2).
// On states, U acts as (U psi)(x) = sqrt(phi_eps'(x)) psi(phi_eps(x)), so
// expectation values transform with the inverse map. For the dilation
// (f = x), <x> of U psi equals e^{-eps} <x> of psi.

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "canonflow/flowcore.hpp"
#include "canonflow/spectral.hpp"

namespace canonflow {

class Grid {
 public:
  Grid(double x0, double dx, std::size_t n);
  // n points covering [lo, hi) with spacing (hi - lo) / n.
  static Grid over(double lo, double hi, std::size_t n);

  double x0() const noexcept { return x0_; }
  double dx() const noexcept { return dx_; }
  std::size_t size() const noexcept { return n_; }
  double x(std::size_t k) const noexcept { return x0_ + static_cast<double>(k) * dx_; }
  double length() const noexcept { return static_cast<double>(n_) * dx_; }
  double back() const noexcept { return x(n_ - 1); }
  std::vector<double> points() const;

  bool operator==(const Grid&) const = default;

 private:
  double x0_;
  double dx_;
  std::size_t n_;
};

/// Grid-sampled state. Values are fixed at construction; every operation
/// returns a new state.
class WaveFunction {
 public:
  WaveFunction(Grid grid, std::vector<cplx> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const cplx> values() const noexcept { return values_; }
  cplx operator[](std::size_t k) const noexcept { return values_[k]; }
  std::size_t size() const noexcept { return values_.size(); }

  double norm() const;
  WaveFunction normalized() const;

 private:
  Grid grid_;
  std::vector<cplx> values_;
};

/// psi(x) = (Re A / pi)^{1/4} exp[-A (x - center)^2 / 2 + i momentum (x - center) + i phase]
struct GaussianState {
  cplx width{1.0, 0.0};
  double center = 0.0;
  double momentum = 0.0;
  double phase = 0.0;

  void validate() const;
  cplx operator()(double x) const;
  WaveFunction rasterize(const Grid& grid) const;

  // Closed-form images under the two f = x chain transformations.
  GaussianState dilated(double eps) const;          // U_dil(eps) applied to the state
  GaussianState chirped(double chi) const;          // exp(-i chi x^2 / 2) applied
};

cplx inner_product(const WaveFunction& a, const WaveFunction& b);  // <a|b>
/// |<a|b>| / (|a| |b|).
double fidelity(const WaveFunction& a, const WaveFunction& b);
/// min over theta of |a - e^{i theta} b|, for states of equal norm. Unlike
/// 1 - fidelity this stays accurate for tiny discrepancies.
double phase_aligned_distance(const WaveFunction& a, const WaveFunction& b);

enum class Interpolant { Spectral, CubicSpline };

struct PointUnitaryOptions {
  Interpolant interpolant = Interpolant::Spectral;
  // Relative norm change above which the transformed support is deemed to
  // have left the grid.
  double leak_tolerance = 1e-9;
  // Edge-decay check: |psi| on the outer 2% of points on each side must stay
  // below edge_threshold * max |psi|.
  double edge_threshold = 1e-10;
  double edge_fraction = 0.02;
  FlowOptions flow{};
};

/// Evaluates the band-limited (or spline) interpolant of psi at arbitrary
/// points; points outside [x0, x0 + n dx) give zero.
std::vector<cplx> resample(const WaveFunction& psi, std::span<const double> points,
                           Interpolant interpolant);

bool satisfies_edge_decay(const WaveFunction& psi, double threshold = 1e-10,
                          double fraction = 0.02);

/// (U psi)(x) = sqrt(phi_eps'(x)) psi(phi_eps(x)). The flow must exist at
/// every grid point (DomainBlowup otherwise); losing norm raises SupportLeakage.
WaveFunction apply_point_unitary(const GeneratorSpec& f, double eps, const WaveFunction& psi,
                                 const PointUnitaryOptions& opts = {});

/// Exact adjoint of apply_point_unitary: sqrt(phi_{-eps}') psi(phi_{-eps}(y))
/// on the range of phi_eps, zero elsewhere. Coincides with the eps -> -eps
/// transform for complete flows and remains defined for flows that escape in
/// finite time (exp-decay, quadratic).
WaveFunction apply_point_unitary_adjoint(const GeneratorSpec& f, double eps,
                                         const WaveFunction& psi,
                                         const PointUnitaryOptions& opts = {});

/// Pointwise exp(-i chi x^2 / 2).
WaveFunction apply_quadratic_phase(double chi, const WaveFunction& psi);

struct Observable {
  enum class Kind { X, X2, P, P2, AnticommXP, Quadratic };
  Kind kind = Kind::X;
  double a = 0.0, b = 0.0, c = 0.0;  // H = a p^2 + b x^2 + (c/2){x,p}

  static Observable x() { return {Kind::X}; }
  static Observable x2() { return {Kind::X2}; }
  static Observable p() { return {Kind::P}; }
  static Observable p2() { return {Kind::P2}; }
  static Observable anticomm_xp() { return {Kind::AnticommXP}; }
  static Observable quadratic(double a, double b, double c) { return {Kind::Quadratic, a, b, c}; }
};

struct Expectation {
  double value = 0.0;
  double imag_residue = 0.0;
};

/// <psi|O|psi> with momentum operators applied spectrally. Throws
/// NotNormalized when |norm - 1| exceeds norm_tolerance.
Expectation expectation(const Observable& obs, const WaveFunction& psi,
                        double norm_tolerance = 1e-6);

/// -i d/dx, spectrally.
std::vector<cplx> apply_momentum(std::span<const cplx> values, double dx);

struct BracketReport {
  double first_residual = 0.0;   // [{f1,p}, f2] = -2i f1 f2'
  double second_residual = 0.0;  // [{f1,p},{f2,p}] = {f3,p}
};

BracketReport verify_bracket_identities(const GeneratorSpec& f1, const GeneratorSpec& f2,
                                        const Grid& grid,
                                        std::span<const WaveFunction> probes);

// CSV with header x,re,im and full double precision.
void write_wavefunction_csv(std::ostream& os, const WaveFunction& psi);
void write_wavefunction_csv(const std::string& path, const WaveFunction& psi);
WaveFunction read_wavefunction_csv(std::istream& is);
WaveFunction read_wavefunction_csv(const std::string& path);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace canonflow
