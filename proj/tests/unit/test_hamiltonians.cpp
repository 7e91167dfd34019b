#include <cmath>

#include "canonflow/hamiltonians.hpp"
#include "canonflow/metricmap.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace canonflow;
using doctest::Approx;

TEST_CASE("dilation transform") {
  const auto h = QuadraticHamiltonian::standard_oscillator(1.0, 1.0);
  const auto d = dilation_transform(h, 0.1, 0.2);
  CHECK(d.a == Approx(0.40936538).epsilon(1e-8));
  CHECK(d.b == Approx(0.61070138).epsilon(1e-8));
  CHECK(d.c == Approx(-0.2).epsilon(1e-15));
  CHECK(dilation_transform(h, 0.0, 0.0) == h);
  const QuadraticHamiltonian k{0.3, 1.7, 0.4};
  const auto s = dilation_transform(k, 0.8, 0.0);
  CHECK(s.a * s.b == Approx(k.a * k.b).epsilon(1e-15));
}

TEST_CASE("quadratic phase transform") {
  const auto q = quadratic_phase_transform({0.5, 0.5, 0.0}, 1.0, 0.0);
  CHECK(q.a == 0.5);
  CHECK(q.b == Approx(1.0));
  CHECK(q.c == Approx(1.0));
  const QuadraticHamiltonian h{0.4, 0.9, -0.3};
  CHECK(quadratic_phase_transform(h, 0.0, 0.0) == h);

  // Cancelling the cross term after a dilation with m e^{2 eps} = m0.
  const double m0 = 2.0, deps = 0.3, ddeps = -0.1;
  const QuadraticHamiltonian d{1.0 / (2 * m0), 0.7, -deps};
  const auto r = quadratic_phase_transform(d, m0 * deps, m0 * ddeps);
  CHECK(std::abs(r.c) < 1e-15);
  CHECK(r.b == Approx(0.7 + 0.5 * (m0 * ddeps - m0 * deps * deps)).epsilon(1e-14));
}

TEST_CASE("effective frequency") {
  const MassProfile ck{TimeProfile::exponential(1.0, 0.2)};
  const FrequencyProfile w{TimeProfile::constant(std::sqrt(1.01))};
  for (double t : {0.0, 1.3, 4.9}) CHECK(effective_frequency(ck, w, t) == Approx(1.0).epsilon(1e-14));
  const MassProfile flat{TimeProfile::constant(2.5)};
  CHECK(effective_frequency(flat, FrequencyProfile{TimeProfile::constant(1.7)}, 3.0) == Approx(1.7));
  const SolvableFamily fam{1.0, 0.5, 0.5, 0.3, 2.0, false};
  CHECK(fam.omega() == Approx(std::sqrt(4.09)).epsilon(1e-15));
  for (double t : {0.0, 2.0, 5.0}) {
    CHECK(effective_frequency(fam.mass_profile(), fam.frequency_profile(), t) == Approx(2.0).epsilon(1e-12));
  }
  const MassProfile steep{TimeProfile::exponential(1.0, 3.0)};
  CHECK(error_kind([&] { effective_frequency(steep, FrequencyProfile{TimeProfile::constant(1.0)}, 0.0); }) ==
        ErrorKind::ImaginaryFrequency);
}

TEST_CASE("omega from mass") {
  const MassProfile ck{TimeProfile::exponential(1.0, 0.2)};
  for (double t : {0.0, 2.2}) CHECK(omega_from_mass(ck, 1.0, t) == Approx(1.0049875621).epsilon(1e-10));
  CHECK(omega_from_mass(MassProfile{TimeProfile::constant(3.0)}, 1.4, 0.5) == Approx(1.4));
  const SolvableFamily fam{1.0, 0.4, 0.8, 0.35, 1.1, false};
  for (double t : {0.0, 1.0, 4.0}) {
    CHECK(omega_from_mass(fam.mass_profile(), 1.1, t) == Approx(std::sqrt(1.21 + 0.35 * 0.35)).epsilon(1e-12));
  }
  // m = cos^2 t has m''/2m - (m'/2m)^2 = -1.
  const MassProfile cos2{TimeProfile::closed_form([](double t) {
    return Derivatives{std::cos(t) * std::cos(t), -std::sin(2 * t), -2 * std::cos(2 * t)};
  })};
  CHECK(omega_from_mass(cos2, 1.5, 0.3) == Approx(std::sqrt(1.25)).epsilon(1e-14));
  CHECK(error_kind([&] { omega_from_mass(cos2, 0.5, 0.3); }) == ErrorKind::NegativeRadicand);
  CHECK(error_kind([] { SolvableFamily{1.0, 1.0, 0.0, 1.0, 0.5, true}.mass_profile(); }) ==
        ErrorKind::ImaginaryFrequency);
}

TEST_CASE("solvable mass family") {
  const SolvableFamily ck{1.0, 1.0, 0.0, 0.1, 1.0, false};
  for (double t : {0.0, 1.0, 3.5}) CHECK(solvable_mass(ck, t).value == Approx(std::exp(0.2 * t)).epsilon(1e-14));
  CHECK(solvable_mass({1.7, 0.5, 0.5, 0.3, 2.0, false}, 0.0).value == Approx(1.7));
  const auto c = SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0);
  CHECK(c.alpha == Approx(0.1));
  CHECK(c.omega() == Approx(std::sqrt(1.01)));
  CHECK(error_kind([] { solvable_mass({1.0, 1.0, -1.0, 0.5, 1.0, false}, 0.0); }) == ErrorKind::MassZeroCrossing);
  CHECK(error_kind([] { SolvableFamily{1.0, 0.0, 0.0, 0.5, 1.0, false}.validate(); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([] { SolvableFamily{1.0, 1.0, 0.0, 2.0, 1.0, true}.validate(); }) == ErrorKind::ImaginaryFrequency);
  const SolvableFamily osc{1.0, 1.0, 0.4, 0.3, 1.0, true};
  CHECK(osc.omega() == Approx(std::sqrt(1.0 - 0.09)));
  for (double t : {0.0, 1.0, 2.0}) CHECK(std::abs(solvability_residual(osc, t)) < 1e-12);
}

TEST_CASE("epsilon profile") {
  const MassProfile m{TimeProfile::exponential(2.0, 0.4)};
  const EpsilonProfile eps{m, 2.0};
  const auto e = eps.at(1.5);
  CHECK(e.value == Approx(-0.3).epsilon(1e-14));
  CHECK(e.first == Approx(-0.2).epsilon(1e-14));
  CHECK(std::abs(e.second) < 1e-14);
  CHECK(eps.chi(1.5) == Approx(-0.4).epsilon(1e-14));
  const MassProfile sampled{TimeProfile::sampled([](double t) { return 2.0 * std::exp(0.4 * t); })};
  const auto s = EpsilonProfile{sampled, 2.0}.at(1.5);
  CHECK(s.first == Approx(e.first).epsilon(1e-8));
  CHECK(std::abs(s.second) < 1e-6);
  const MassProfile bad{TimeProfile::closed_form([](double t) { return Derivatives{1.0 - t, -1.0, 0.0}; })};
  CHECK(error_kind([&] { bad.at(2.0); }) == ErrorKind::MassZeroCrossing);
}

TEST_CASE("reduced Hamiltonian") {
  const SolvableFamily fam{1.0, 0.5, 0.5, 0.3, 2.0, false};
  for (double t : {0.0, 2.5, 5.0}) {
    const auto h = reduced_hamiltonian(fam.mass_profile(), fam.frequency_profile(), t, 1.0);
    CHECK(h.a == Approx(0.5).epsilon(1e-12));
    CHECK(h.b == Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(h.c) < 1e-12);
  }
}

TEST_CASE("general f transform") {
  const StandardHamiltonian osc{1.3, [](double x) { return 0.4 * x * x; }, 0.4};
  const auto lin = general_f_transform(osc, GeneratorSpec::linear(), 0.2, 0.1).as_quadratic();
  REQUIRE(lin.has_value());
  const auto d = dilation_transform({0.5 / 1.3, 0.4, 0.0}, 0.2, 0.1);
  CHECK(lin->a == Approx(d.a));
  CHECK(lin->b == Approx(d.b));
  CHECK(lin->c == Approx(d.c));

  const Grid grid = Grid::over(-8.0, 8.0, 256);
  const WaveFunction psi = GaussianState{1.0, 0.3, 0.2, 0.0}.rasterize(grid);
  const auto id = TransformedOperator(osc, GeneratorSpec::exp_decay(1.0), 0.0, 0.0);
  const WaveFunction hpsi = id.apply(psi);
  CHECK(expectation(Observable::p2(), psi).value / 2.6 + 0.4 * expectation(Observable::x2(), psi).value ==
        Approx(inner_product(psi, hpsi).real()).epsilon(1e-10));

  const StandardHamiltonian free{1.0, {}, std::nullopt};
  const auto f = GeneratorSpec::exp_decay(1.0);
  const BandedMatrix a = TransformedOperator(free, f, 0.4, 0.0).assemble(grid);
  const BandedMatrix b = curved_hamiltonian_matrix(metric_from_generator(f, 0.4), 1.0, grid);
  CHECK(a.max_abs_difference(b) <= 1e-12 * b.max_abs());
  const BandedMatrix moving = TransformedOperator(free, f, 0.4, 0.3).assemble(grid);
  CHECK(moving.hermiticity_residual() == 0.0);
}
