#include <cmath>
#include <algorithm>
#include <numbers>
#include <sstream>

#include "canonflow/propagators.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace canonflow;
using doctest::Approx;

namespace {
const Grid kGrid = Grid::over(-12.0, 12.0, 512);
TimeGrid once(double t1, double dt) { return TimeGrid::span(0.0, t1, dt, std::size_t(-1)); }
}  // namespace

TEST_CASE("Hermite basis") {
  const HermiteBasis basis = HermiteBasis::fitted(kGrid, 1.0, 1.0);
  CHECK(basis.size() >= 20);
  CHECK(basis.gram_residual() < 1e-8);
  CHECK(basis.eigenvalue(3) == 3.5);
  const WaveFunction psi = GaussianState{1.2, 0.5, -0.3, 0.0}.rasterize(kGrid);
  CHECK(phase_aligned_distance(hermite_propagate(psi, basis, 0.0), psi) < 1e-10);
  const WaveFunction g = GaussianState{}.rasterize(kGrid);
  CHECK(std::abs(inner_product(g, hermite_propagate(g, basis, 0.9)) - std::polar(1.0, -0.45)) < 1e-10);
  const WaveFunction far = GaussianState{1.0, 9.0, 0.0, 0.0}.rasterize(kGrid);
  CHECK(error_kind([&] { hermite_propagate(far, basis, 1.0); }) == ErrorKind::TruncationError);
}

TEST_CASE("time grid") {
  const TimeGrid t = TimeGrid::span(0.0, 1.0, 0.3);
  CHECK(t.steps == 3);
  CHECK(t.dt == Approx(1.0 / 3.0));
  CHECK(t.end() == Approx(1.0));
  CHECK(TimeGrid::span(2.0, 0.0, -0.5).steps == 4);
  CHECK(error_kind([] { TimeGrid::span(0.0, 1.0, -0.1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("split-step on a static oscillator") {
  const WaveFunction g = GaussianState{}.rasterize(kGrid);
  const auto traj = split_step_propagate({TimeProfile::constant(1.0)}, {TimeProfile::constant(1.0)}, g,
                                         TimeGrid::span(0.0, 1.0, 1e-3, 100));
  CHECK(1.0 - fidelity(traj.final_state, g) < 1e-8);
  CHECK(traj.rows.size() == 11);
  CHECK(traj.rows.front().energy == Approx(0.5).epsilon(1e-10));
  CHECK(traj.report.steps == 1000);
  CHECK(traj.report.max_norm_drift < 1e-10);
  CHECK(std::isnan(traj.rows.back().fidelity_vs_exact));
}

TEST_CASE("resolution check rejects unresolved states") {
  const Grid coarse = Grid::over(-12.0, 12.0, 64);
  const WaveFunction fast = GaussianState{1.0, 0.0, 7.0, 0.0}.rasterize(coarse);
  CHECK(error_kind([&] {
          split_step_propagate({TimeProfile::constant(1.0)}, {TimeProfile::constant(1.0)}, fast, once(0.1, 0.01));
        }) == ErrorKind::ResolutionError);
}

TEST_CASE("exact pipeline") {
  const auto ck = SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0);
  const WaveFunction psi = GaussianState{1.0, 1.0, 0.0, 0.0}.rasterize(kGrid);
  CHECK(phase_aligned_distance(exact_solvable_propagate(ck, psi, 0.0), psi) < 1e-10);

  const SolvableFamily stat{1.0, 1.0, 0.0, 0.0, 1.3, false};
  const HermiteBasis basis = HermiteBasis::fitted(kGrid, 1.0, 1.3);
  CHECK(phase_aligned_distance(exact_solvable_propagate(stat, psi, 2.0), hermite_propagate(psi, basis, 2.0)) <
        1e-9);

  const auto traj = split_step_propagate(ck.mass_profile(), ck.frequency_profile(), psi, once(2.0, 1e-3));
  CHECK(1.0 - fidelity(traj.final_state, exact_solvable_propagate(ck, psi, 2.0)) < 1e-6);
}

TEST_CASE("Gaussian closed-form transport") {
  const auto ck = SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0);
  const GaussianState g0{1.0, 1.0, 0.0, 0.0};
  const GaussianState same = gaussian_exact_propagate(ck, g0, 0.0);
  CHECK(same.center == Approx(1.0));
  CHECK(same.width.real() == Approx(1.0));
  const GaussianState e = gaussian_oscillator_evolve({2.0, 0.5, 0.0, 0.0}, 1.0, 2.0, 0.7);
  CHECK(e.width.real() == Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(e.width.imag()) < 1e-14);
  CHECK(e.center == Approx(0.5 * std::cos(1.4)));
  CHECK(e.momentum == Approx(-0.5 * 2.0 * std::sin(1.4)));
  CHECK(1.0 - fidelity(gaussian_exact_propagate(ck, g0, 3.0).rasterize(kGrid),
                       exact_solvable_propagate(ck, g0.rasterize(kGrid), 3.0)) < 1e-8);
}

TEST_CASE("Crank-Nicolson") {
  const Grid grid = Grid::over(-20.0, 20.0, 1024);
  const WaveFunction psi = GaussianState{1.0, 0.0, 1.0, 0.0}.rasterize(grid);
  const auto flat = crank_nicolson_curved(MetricProfile::constant(1.0), 1.0, psi, once(1.0, 1e-3));
  const auto free = split_step_propagate({TimeProfile::constant(1.0)}, {TimeProfile::constant(0.0)}, psi,
                                         TimeGrid::span(0.0, 1.0, 1.0));
  CHECK(1.0 - fidelity(flat.final_state, free.final_state) < 1e-7);
  CHECK(flat.report.max_norm_drift < 1e-10);
  const auto stat = crank_nicolson_curved([](double) { return MetricProfile::constant(1.0); }, 1.0, psi,
                                          once(0.2, 1e-3));
  const auto fixed = crank_nicolson_curved(MetricProfile::constant(1.0), 1.0, psi, once(0.2, 1e-3));
  CHECK(phase_aligned_distance(stat.final_state, fixed.final_state) < 1e-12);
}

TEST_CASE("Richardson ratio") {
  const auto ck = SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0);
  const WaveFunction psi = GaussianState{1.0, 1.0, 0.0, 0.0}.rasterize(kGrid);
  const double r = richardson_ratio(
      [&](double dt) { return split_step_propagate(ck.mass_profile(), ck.frequency_profile(), psi, once(1.0, dt)).final_state; },
      0.04);
  CHECK(r == Approx(4.0).epsilon(0.2));
}

TEST_CASE("trajectory csv") {
  const WaveFunction g = GaussianState{}.rasterize(kGrid);
  const auto traj = split_step_propagate({TimeProfile::constant(1.0)}, {TimeProfile::constant(1.0)}, g,
                                         TimeGrid::span(0.0, 0.01, 1e-3, 5));
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  const std::string s = os.str();
  CHECK(s.rfind("t,norm,fidelity_vs_exact,x_mean,p_mean,energy\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}
