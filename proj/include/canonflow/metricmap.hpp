#pragma once

// Free particle <-> curved metric correspondence. A point transformation with
// flow phi maps p^2/2m to (1/2m) g^{-1/4} p g^{-1/2} p g^{-1/4} with
// g = phi'^2 = F2^{-2}; the inverse problem recovers phi and a generator f.

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "canonflow/banded.hpp"
#include "canonflow/flowcore.hpp"
#include "canonflow/gridspace.hpp"

namespace canonflow {

class MetricProfile {
 public:
  static MetricProfile from_function(std::function<double(double)> g,
                                     std::function<double(double)> dg = {},
                                     std::string label = "function");
  static MetricProfile constant(double value);
  /// Cubic spline through (x, g) samples with strictly increasing x;
  /// constant extrapolation outside the table.
  static MetricProfile from_table(std::vector<double> x, std::vector<double> g);
  static MetricProfile from_csv(const std::string& path);
  static MetricProfile from_csv(std::istream& is);

  /// Throws SingularMetric unless g(x) is finite and positive.
  double operator()(double x) const;
  double derivative(double x) const;
  const std::string& label() const noexcept { return label_; }

 private:
  MetricProfile(std::function<double(double)> g, std::function<double(double)> dg,
                std::string label)
      : g_(std::move(g)), dg_(std::move(dg)), label_(std::move(label)) {}
  std::function<double(double)> g_;
  std::function<double(double)> dg_;
  std::string label_;
};

/// g(x) = phi_eps'(x)^2 = F2(x)^{-2}.
MetricProfile metric_from_generator(const GeneratorSpec& f, double eps,
                                    const FlowOptions& opts = {});

/// Hermitian banded discretization of (1/2m) g^{-1/4} p g^{-1/2} p g^{-1/4},
/// with g^{-1/4} at the nodes and g^{-1/2} at the cell midpoints.
BandedMatrix curved_hamiltonian_matrix(const MetricProfile& g, double mass, const Grid& grid,
                                       int order = kDefaultStencilOrder);

struct InverseOptions {
  // phi(anchor); defaults to anchor + eps, which makes the flat metric a unit shift.
  std::optional<double> anchor_image;
  std::size_t table_points = 4001;
  std::size_t max_iterations = 1000000;
};

struct InverseResult {
  GeneratorSpec generator;               // f with u(phi(x)) = u(x) + eps, f = 1/u'
  std::function<double(double)> flow;    // phi on the working interval
  std::function<double(double)> inverse_flow;
  double lo = 0.0;
  double hi = 0.0;
  double eps = 0.0;
};

/// Solves phi'(x) = sqrt(g(x)) on [lo, hi] and embeds phi into the flow of a
/// generator through the Abel equation u(phi(x)) = u(x) + eps, seeded on the
/// fundamental domain between anchor and phi(anchor).
InverseResult generator_from_metric(const MetricProfile& g, double eps, double anchor, double lo,
                                    double hi, const InverseOptions& opts = {});

struct EquivalenceOptions {
  double dt = 1e-3;
  double mass = 1.0;
  int order = kDefaultStencilOrder;
  bool halving_check = false;
  PointUnitaryOptions unitary{};
};

struct EquivalenceReport {
  double fidelity = 0.0;
  double distance = 0.0;  // phase-aligned L2 distance
  std::optional<double> distance_half_dt;
  std::optional<double> halving_ratio;  // distance / distance_half_dt
  double wall_time = 0.0;
};

/// Compares Crank-Nicolson evolution under g = F2^{-2} with
/// U exp(-i H_free T) U^dagger psi0 for a constant eps.
EquivalenceReport verify_metric_equivalence(const GeneratorSpec& f, double eps,
                                            const WaveFunction& psi0, double T,
                                            const EquivalenceOptions& opts = {});

}  // namespace canonflow
