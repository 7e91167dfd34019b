#include <cmath>
#include <sstream>

#include "canonflow/gridspace.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace canonflow;
using doctest::Approx;

namespace {
const Grid kGrid = Grid::over(-16.0, 16.0, 1024);
WaveFunction ground() { return GaussianState{}.rasterize(kGrid); }
}  // namespace

TEST_CASE("grid and states") {
  const Grid g(-1.0, 0.25, 8);
  CHECK(g.x(4) == 0.0);
  CHECK(g.back() == 0.75);
  CHECK(Grid::over(-1.0, 1.0, 8).dx() == 0.25);
  CHECK(error_kind([] { Grid(0.0, 0.1, 4); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([] { Grid(0.0, -0.1, 16); }) == ErrorKind::InvalidArgument);
  CHECK(ground().norm() == Approx(1.0).epsilon(1e-12));
  CHECK(error_kind([] { GaussianState{cplx(-1.0, 0.0)}.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("point unitary examples") {
  const WaveFunction psi = ground();
  const WaveFunction u = apply_point_unitary(GeneratorSpec::linear(), 0.3, psi);
  CHECK(expectation(Observable::x2(), u).value == Approx(0.2744058180).epsilon(1e-9));
  CHECK(phase_aligned_distance(apply_point_unitary(GeneratorSpec::quadratic(), 0.0, psi), psi) < 1e-14);
  const WaveFunction moved = GaussianState{1.3, 0.4, -0.7, 0.0}.rasterize(kGrid);
  CHECK(apply_point_unitary(GeneratorSpec::linear(), 0.5, moved).norm() == Approx(1.0).epsilon(1e-9));
  CHECK(apply_point_unitary(GeneratorSpec::linear(), 0.5, psi, {Interpolant::CubicSpline}).norm() ==
        Approx(1.0).epsilon(1e-6));
}

TEST_CASE("adjoint inverts the point unitary") {
  const WaveFunction psi = GaussianState{1.0, 7.0, 0.3, 0.0}.rasterize(kGrid);
  const auto f = GeneratorSpec::exp_decay(1.0);
  const WaveFunction back = apply_point_unitary_adjoint(f, 0.4, apply_point_unitary(f, 0.4, psi));
  CHECK(1.0 - fidelity(back, psi) < 1e-9);
  const auto lin = GeneratorSpec::linear();
  CHECK(phase_aligned_distance(apply_point_unitary_adjoint(lin, 0.3, psi),
                               apply_point_unitary(lin, -0.3, psi)) < 1e-9);
}

TEST_CASE("support leaving the grid is an error") {
  const WaveFunction wide = GaussianState{0.05}.rasterize(Grid::over(-40.0, 40.0, 1024));
  CHECK(error_kind([&] { apply_point_unitary(GeneratorSpec::linear(), -1.0, wide); }) ==
        ErrorKind::SupportLeakage);
  CHECK(error_kind([] { apply_point_unitary(GeneratorSpec::quadratic(), 0.5, ground()); }) ==
        ErrorKind::DomainBlowup);
}

TEST_CASE("quadratic phase") {
  const WaveFunction psi = ground();
  CHECK(phase_aligned_distance(apply_quadratic_phase(0.0, psi), psi) == 0.0);
  CHECK(phase_aligned_distance(apply_quadratic_phase(-1.0, apply_quadratic_phase(1.0, psi)), psi) < 1e-14);
  const GaussianState g{cplx(1.2, 0.0)};
  const GaussianState c = g.chirped(0.7);
  CHECK(c.width.real() == Approx(1.2));
  CHECK(c.width.imag() == Approx(0.7));
  CHECK(1.0 - fidelity(c.rasterize(kGrid), apply_quadratic_phase(0.7, g.rasterize(kGrid))) < 1e-12);
}

TEST_CASE("expectations") {
  const WaveFunction psi = ground();
  CHECK(std::abs(expectation(Observable::x(), psi).value) < 1e-14);
  CHECK(expectation(Observable::p2(), psi).value == Approx(0.5).epsilon(1e-12));
  CHECK(expectation(Observable::quadratic(0.5, 0.5, 0.0), psi).value == Approx(0.5).epsilon(1e-12));
  const WaveFunction moving = GaussianState{1.0, 1.0, 0.8, 0.0}.rasterize(kGrid);
  CHECK(expectation(Observable::p(), moving).value == Approx(0.8).epsilon(1e-12));
  CHECK(expectation(Observable::anticomm_xp(), moving).value == Approx(1.6).epsilon(1e-12));
  const double x0 = expectation(Observable::x(), moving).value;
  const WaveFunction u = apply_point_unitary(GeneratorSpec::linear(), 0.2, moving);
  CHECK(expectation(Observable::x(), u).value == Approx(std::exp(-0.2) * x0).epsilon(1e-10));
  CHECK(error_kind([&] {
          expectation(Observable::x(), WaveFunction(kGrid, std::vector<cplx>(kGrid.size(), 1.0)));
        }) == ErrorKind::NotNormalized);
}

TEST_CASE("bracket identities") {
  const Grid g = Grid::over(-6.0, 8.0, 256);
  std::vector<WaveFunction> probes{GaussianState{2.0}.rasterize(g),
                                   GaussianState{3.0, 0.5, -1.0, 0.0}.rasterize(g)};
  const auto r = verify_bracket_identities(GeneratorSpec::linear(), GeneratorSpec::quadratic(), g, probes);
  CHECK(r.first_residual <= 1e-8);
  CHECK(r.second_residual <= 1e-8);
  const auto same = verify_bracket_identities(GeneratorSpec::quadratic(), GeneratorSpec::quadratic(), g, probes);
  CHECK(same.second_residual <= 1e-8);
  const auto canon = verify_bracket_identities(GeneratorSpec::constant(1.0), GeneratorSpec::exp_decay(1.0), g, probes);
  CHECK(canon.first_residual <= 1e-8);
}

TEST_CASE("wavefunction csv round trip") {
  const WaveFunction psi = GaussianState{cplx(1.0, 0.3), 0.2, 0.5, 0.1}.rasterize(Grid::over(-8, 8, 64));
  std::stringstream ss;
  write_wavefunction_csv(ss, psi);
  CHECK(ss.str().rfind("x,re,im\n", 0) == 0);
  const WaveFunction back = read_wavefunction_csv(ss);
  CHECK(back.grid().size() == 64);
  for (std::size_t k = 0; k < 64; ++k) CHECK(back[k] == psi[k]);
  std::stringstream bad("x,re,im\n0,1\n");
  CHECK(error_kind([&] { read_wavefunction_csv(bad); }) == ErrorKind::IoError);
}

TEST_CASE("format_double") {
  CHECK(format_double(4.0) == "4.0");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-20) == "1e-20");
  CHECK(std::stod(format_double(std::exp(1.0))) == std::exp(1.0));
}
