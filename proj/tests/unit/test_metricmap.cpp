#include <cmath>
#include <numbers>
#include <sstream>

#include "canonflow/metricmap.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace canonflow;
using doctest::Approx;

TEST_CASE("metric from generator") {
  const MetricProfile q = metric_from_generator(GeneratorSpec::quadratic(), 0.2);
  for (double x : {-2.0, 0.0, 1.5, 4.0}) CHECK(q(x) == Approx(std::pow(1 - 0.2 * x, -4.0)).epsilon(1e-13));
  const MetricProfile e = metric_from_generator(GeneratorSpec::exp_decay(1.0), 0.4);
  for (double x : {-3.0, 0.0, 2.0}) CHECK(e(x) == Approx(std::pow(1 + 0.4 * std::exp(-x), -2.0)).epsilon(1e-13));
  const MetricProfile z = metric_from_generator(GeneratorSpec::exp_decay(1.0), 0.0);
  CHECK(z(1.3) == 1.0);
  CHECK(metric_from_generator(GeneratorSpec::linear(), 0.3)(2.0) == Approx(std::exp(0.6)));
  CHECK(error_kind([&] { q(5.0); }) == ErrorKind::DomainBlowup);
}

TEST_CASE("metric profiles") {
  const MetricProfile c = MetricProfile::constant(2.0);
  CHECK(c(10.0) == 2.0);
  CHECK(c.derivative(1.0) == 0.0);
  const MetricProfile f = MetricProfile::from_function([](double x) { return 1.0 + x * x; });
  CHECK(f.derivative(0.5) == Approx(1.0).epsilon(1e-8));
  std::vector<double> xs, gs;
  for (int k = 0; k <= 200; ++k) {
    xs.push_back(-2.0 + 0.02 * k);
    gs.push_back(std::exp(0.3 * xs.back()));
  }
  const MetricProfile t = MetricProfile::from_table(xs, gs);
  CHECK(t(0.123) == Approx(std::exp(0.3 * 0.123)).epsilon(1e-8));
  CHECK(t(5.0) == Approx(gs.back()));
  std::istringstream csv("x,g\n0,1\n1,2\n2,3\n");
  CHECK(MetricProfile::from_csv(csv)(1.5) == Approx(2.5).epsilon(1e-12));
  std::istringstream neg("x,g\n0,1\n1,-2\n");
  CHECK(error_kind([&] { MetricProfile::from_csv(neg); }) == ErrorKind::SingularMetric);
  CHECK(error_kind([] { MetricProfile::constant(0.0); }) == ErrorKind::SingularMetric);
}

TEST_CASE("curved Hamiltonian matrix") {
  const Grid grid = Grid::over(-10.0, 10.0, 128);
  const BandedMatrix flat = curved_hamiltonian_matrix(MetricProfile::constant(1.0), 1.0, grid);
  const BandedMatrix flat2 = curved_hamiltonian_matrix(MetricProfile::from_function([](double) { return 1.0; }), 1.0, grid);
  CHECK(flat.max_abs_difference(flat2) == 0.0);
  const BandedMatrix four = curved_hamiltonian_matrix(MetricProfile::constant(4.0), 1.0, grid);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(four.at(i, j) - 0.25 * flat.at(i, j)) < 1e-12);
  }
  CHECK(curved_hamiltonian_matrix(metric_from_generator(GeneratorSpec::exp_decay(1.0), 0.4), 1.0, grid)
            .hermiticity_residual() == 0.0);
  // Plane-wave dispersion of the flat operator.
  const auto ev = lowest_eigenvalues(curved_hamiltonian_matrix(MetricProfile::constant(1.0), 1.0,
                                                               Grid::over(-10.0, 10.0, 512)),
                                     3);
  const double k1 = std::numbers::pi / 20.0;
  CHECK(ev[0] == Approx(0.5 * k1 * k1).epsilon(1e-3));
}

TEST_CASE("inverse problem") {
  const MetricProfile flat = MetricProfile::constant(1.0);
  const InverseResult inv = generator_from_metric(flat, 0.5, 0.0, -3.0, 3.0);
  CHECK(inv.flow(1.0) == Approx(1.5).epsilon(1e-12));
  CHECK(inv.inverse_flow(1.5) == Approx(1.0).epsilon(1e-12));
  CHECK(inv.generator.value(0.7) == Approx(1.0).epsilon(1e-12));

  const auto f = GeneratorSpec::exp_decay(1.0);
  InverseOptions io;
  io.anchor_image = flow_map(f, 0.4, 0.0);
  const InverseResult e = generator_from_metric(metric_from_generator(f, 0.4), 0.4, 0.0, -4.5, 5.0, io);
  for (double x : {-4.0, -1.0, 0.0, 2.5, 4.0}) CHECK(e.flow(x) == Approx(flow_map(f, 0.4, x)).epsilon(1e-8));
  CHECK(flow_map(e.generator, 0.4, 1.0) == Approx(flow_map(f, 0.4, 1.0)).epsilon(1e-7));

  // f = x^2 fixes 0, so an interval around it has no fundamental domain.
  const MetricProfile q = metric_from_generator(GeneratorSpec::quadratic(), 0.2);
  InverseOptions qo;
  qo.anchor_image = 0.0;
  CHECK(error_kind([&] { generator_from_metric(q, 0.2, 0.0, -2.0, 2.0, qo); }) == ErrorKind::FixedPointInInterval);
  // A backward shift is embedded into the flow of f = -1.
  InverseOptions back;
  back.anchor_image = -0.5;
  const InverseResult rev = generator_from_metric(flat, 0.5, 0.0, -3.0, 3.0, back);
  CHECK(rev.generator.value(1.0) == Approx(-1.0).epsilon(1e-12));
  CHECK(rev.flow(1.0) == Approx(0.5).epsilon(1e-12));
  CHECK(error_kind([&] { generator_from_metric(flat, 0.0, 0.0, -3.0, 3.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("metric equivalence") {
  const Grid grid = Grid::over(-10.0, 20.0, 1024);
  const WaveFunction psi = GaussianState{1.0, 5.0, 0.0, 0.0}.rasterize(grid);
  const auto zero = verify_metric_equivalence(GeneratorSpec::exp_decay(1.0), 0.0, psi, 0.5);
  CHECK(1.0 - zero.fidelity < 1e-10);
  EquivalenceOptions opts;
  opts.dt = 2e-3;
  const auto r = verify_metric_equivalence(GeneratorSpec::exp_decay(1.0), 0.4, psi, 0.5, opts);
  CHECK(1.0 - r.fidelity < 1e-4);
  CHECK_FALSE(r.halving_ratio.has_value());
}
