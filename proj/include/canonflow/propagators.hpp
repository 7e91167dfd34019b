#pragma once

// Time evolution for the oscillator family and the curved-metric Hamiltonian:
// the exact solution built from the transformation chain, and independent
// integrators (Strang split-step, Crank-Nicolson) that validate it.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "canonflow/banded.hpp"
#include "canonflow/gridspace.hpp"
#include "canonflow/hamiltonians.hpp"
#include "canonflow/metricmap.hpp"

namespace canonflow {

/// Eigenfunctions of p^2/(2 m0) + m0 Omega0^2 x^2 / 2 sampled on a grid.
class HermiteBasis {
 public:
  HermiteBasis(const Grid& grid, std::size_t order, double m0, double Omega0);

  /// Largest order whose functions still fit inside the grid both in
  /// position and in wavenumber.
  static std::size_t max_resolved_order(const Grid& grid, double m0, double Omega0);
  static HermiteBasis fitted(const Grid& grid, double m0, double Omega0);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return functions_.size(); }
  double m0() const noexcept { return m0_; }
  double Omega0() const noexcept { return Omega0_; }
  double length_scale() const noexcept { return 1.0 / std::sqrt(m0_ * Omega0_); }
  double eigenvalue(std::size_t n) const noexcept {
    return (static_cast<double>(n) + 0.5) * Omega0_;
  }
  const std::vector<double>& function(std::size_t n) const { return functions_.at(n); }

  /// max |<psi_j|psi_k> - delta_jk| over the basis.
  double gram_residual() const;
  std::vector<cplx> coefficients(const WaveFunction& psi) const;
  WaveFunction synthesize(std::span<const cplx> coeffs) const;

 private:
  Grid grid_;
  double m0_;
  double Omega0_;
  std::vector<std::vector<double>> functions_;
};

/// Evolution under the static oscillator with phases e^{-i (n+1/2) Omega0 t}.
/// Throws TruncationError when the basis captures less than
/// 1 - capture_tolerance of the state's mass.
WaveFunction hermite_propagate(const WaveFunction& psi, const HermiteBasis& basis, double t,
                               double capture_tolerance = 1e-10);

/// Fixed-step time grid from t0 with `steps` steps of size dt (dt may be
/// negative); a trajectory row is written every `stride` steps and at the end.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-3;
  std::size_t steps = 0;
  std::size_t stride = 1;

  /// Steps of size close to dt covering [t0, t1]; throws when dt does not
  /// point from t0 towards t1.
  static TimeGrid span(double t0, double t1, double dt, std::size_t stride = 1);
  double end() const noexcept { return t0 + static_cast<double>(steps) * dt; }
  double time(std::size_t step) const noexcept { return t0 + static_cast<double>(step) * dt; }
};

struct StepperReport {
  std::size_t steps = 0;
  double max_norm_drift = 0.0;
  double max_residual = 0.0;  // max ||i dpsi/dt - H(t_mid) psi_mid|| / ||psi||
  double wall_time = 0.0;      // seconds
};

struct TrajectoryRow {
  double t = 0.0;
  double norm = 0.0;
  double fidelity_vs_exact = std::numeric_limits<double>::quiet_NaN();
  double x_mean = 0.0;
  double p_mean = 0.0;
  double energy = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  WaveFunction final_state;
  StepperReport report;
};

using ExactReference = std::function<WaveFunction(double t)>;

struct SplitStepOptions {
  // Mass fraction allowed in the outer 10% of the wavenumber range.
  double resolution_tail = 1e-10;
  // Largest accepted Schrodinger residual; exceeding it raises StepFailure.
  double residual_bound = std::numeric_limits<double>::infinity();
  std::size_t residual_samples = 16;
  ExactReference exact;
};

/// Strang splitting for H(t) = p^2/(2 m(t)) + m(t) omega(t)^2 x^2 / 2 with
/// coefficients sampled at the step midpoint.
Trajectory split_step_propagate(const MassProfile& m, const FrequencyProfile& omega,
                                const WaveFunction& psi, const TimeGrid& time,
                                const SplitStepOptions& opts = {});

struct ExactOptions {
  std::optional<double> m_ref;  // defaults to m(0)
  PointUnitaryOptions unitary{};
  double capture_tolerance = 1e-10;
};

/// psi(t) = U_dil(-eps(t)) Q(-chi(t)) exp(-i H'' t) Q(chi(0)) U_dil(eps(0)) psi0,
/// eps = (1/2) ln(m_ref/m), chi = m_ref eps', Q(chi) = exp(-i chi x^2/2) and
/// H'' the static oscillator (m_ref, Omega0).
WaveFunction exact_solvable_propagate(const SolvableFamily& family, const WaveFunction& psi0,
                                      double t, const ExactOptions& opts = {});

/// Same chain with a prebuilt basis (reused across output times).
WaveFunction exact_solvable_propagate(const SolvableFamily& family, const WaveFunction& psi0,
                                      double t, const HermiteBasis& basis,
                                      const ExactOptions& opts = {});

/// Closed-form Gaussian evolution under the static oscillator (mass M, frequency Omega).
GaussianState gaussian_oscillator_evolve(const GaussianState& g, double M, double Omega, double t);

GaussianState gaussian_exact_propagate(const SolvableFamily& family, const GaussianState& g0,
                                       double t, std::optional<double> m_ref = std::nullopt);

struct CrankNicolsonOptions {
  int order = kDefaultStencilOrder;
  ExactReference exact;
};

/// Cayley-form Crank-Nicolson for the curved Hamiltonian
/// (1/2m) g^{-1/4} p g^{-1/2} p g^{-1/4}.
Trajectory crank_nicolson_curved(const MetricProfile& g, double mass, const WaveFunction& psi,
                                 const TimeGrid& time, const CrankNicolsonOptions& opts = {});

/// Time-dependent metric, reassembled at every step midpoint.
Trajectory crank_nicolson_curved(const std::function<MetricProfile(double)>& g, double mass,
                                 const WaveFunction& psi, const TimeGrid& time,
                                 const CrankNicolsonOptions& opts = {});

/// ||y(dt) - y(dt/2)|| / ||y(dt/2) - y(dt/4)||, which tends to 4 for a
/// second-order method.
double richardson_ratio(const std::function<WaveFunction(double dt)>& run, double dt);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace canonflow
