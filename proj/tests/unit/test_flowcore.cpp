#include <cmath>

#include "canonflow/flowcore.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace canonflow;
using doctest::Approx;

TEST_CASE("flow_map closed forms") {
  CHECK(flow_map(GeneratorSpec::linear(), 0.5, 2.0) == Approx(3.2974425414).epsilon(1e-10));
  CHECK(flow_map(GeneratorSpec::quadratic(), 0.25, 2.0) == Approx(4.0).epsilon(1e-15));
  CHECK(flow_map(GeneratorSpec::exp_decay(1.0), 0.5, 0.0) == Approx(0.4054651081).epsilon(1e-10));
  for (const auto& f : {GeneratorSpec::linear(), GeneratorSpec::quadratic(), GeneratorSpec::exp_decay(2.0),
                        GeneratorSpec::custom([](double x) { return std::sin(x) + 2.0; })}) {
    CHECK(flow_map(f, 0.0, 0.7) == 0.7);
    CHECK(flow_jacobian(f, 0.0, 0.7) == 1.0);
  }
}

TEST_CASE("conjugation factor and jacobian") {
  CHECK(conjugation_factor(GeneratorSpec::linear(), 0.5, -3.0) == Approx(0.6065306597).epsilon(1e-10));
  CHECK(conjugation_factor(GeneratorSpec::quadratic(), 0.25, 2.0) == Approx(0.25).epsilon(1e-15));
  CHECK(conjugation_factor(GeneratorSpec::exp_decay(1.0), 0.5, 0.0) == Approx(1.5).epsilon(1e-15));
  CHECK(flow_jacobian(GeneratorSpec::linear(), 0.5, 1.0) == Approx(1.6487212707).epsilon(1e-10));
  CHECK(flow_jacobian(GeneratorSpec::quadratic(), 0.25, 2.0) == Approx(4.0).epsilon(1e-15));

  const auto q = GeneratorSpec::quadratic();
  const double h = 1e-5;
  const double fd = (flow_map(q, 0.25, 2.0 + h) - flow_map(q, 0.25, 2.0 - h)) / (2 * h);
  CHECK(fd == Approx(4.0).epsilon(1e-8));
}

TEST_CASE("custom path agrees with closed forms") {
  for (const auto& f : {GeneratorSpec::linear(), GeneratorSpec::quadratic(), GeneratorSpec::exp_decay(1.0)}) {
    const auto ode = f.as_custom();
    CHECK_FALSE(ode.is_closed_form());
    for (double eps : {-0.6, -0.1, 0.3}) {
      for (double x : {-1.5, 0.2, 1.1}) {
        if (!try_evaluate_flow(f, eps, x).domain_ok) continue;
        const auto a = evaluate_flow(f, eps, x);
        const auto b = evaluate_flow(ode, eps, x);
        CHECK(b.x_out == Approx(a.x_out).epsilon(1e-8));
        CHECK(b.f2 == Approx(a.f2).epsilon(1e-8));
        CHECK(b.f2 * b.jacobian == Approx(1.0).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("domain violations are reported") {
  CHECK(error_kind([] { flow_map(GeneratorSpec::quadratic(), 0.5, 2.0); }) == ErrorKind::DomainBlowup);
  CHECK(error_kind([] { flow_map(GeneratorSpec::quadratic(), 1.0, 3.0); }) == ErrorKind::DomainBlowup);
  CHECK(error_kind([] { flow_map(GeneratorSpec::exp_decay(1.0), -2.0, 0.0); }) == ErrorKind::DomainBlowup);
  CHECK(error_kind([] { GeneratorSpec::exp_decay(0.0); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([] { flow_map(GeneratorSpec::linear(), NAN, 0.0); }) == ErrorKind::InvalidArgument);
  CHECK_FALSE(try_evaluate_flow(GeneratorSpec::quadratic(), 0.5, 2.0).domain_ok);
  // e^{x} + eps > 0 is the real condition; eps * lambda < 1 is not needed.
  CHECK(std::isfinite(flow_map(GeneratorSpec::exp_decay(1.0), 3.0, 0.0)));
}

TEST_CASE("fixed points use the limiting weight") {
  const auto q = GeneratorSpec::quadratic();
  CHECK(flow_map(q, 0.7, 0.0) == 0.0);
  CHECK(conjugation_factor(q, 0.7, 0.0) == Approx(1.0));
  const auto ode = q.as_custom();
  CHECK(conjugation_factor(ode, 0.7, 0.0) == Approx(1.0).epsilon(1e-8));
  const auto s = GeneratorSpec::custom([](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
  CHECK(conjugation_factor(s, 0.4, 0.0) == Approx(std::exp(-0.4)).epsilon(1e-8));
}

TEST_CASE("bracket_f3") {
  const auto h1 = bracket_f3(GeneratorSpec::linear(), GeneratorSpec::quadratic());
  const auto h2 = bracket_f3(GeneratorSpec::exp_decay(1.0), GeneratorSpec::exp_decay(1.0));
  const auto h3 = bracket_f3(GeneratorSpec::linear(), GeneratorSpec::constant(1.0));
  for (double x : {-2.0, 0.0, 0.5, 3.0}) {
    CHECK(h1(x) == Approx(2 * x * x));
    CHECK(h2(x) == 0.0);
    CHECK(h3(x) == Approx(-2.0));
  }
}

TEST_CASE("custom generators validate their interval") {
  const auto f = GeneratorSpec::custom([](double x) { return 1.0 + x * x; }, {}, -1.0, 1.0, "bump");
  CHECK(f.name() == "bump");
  CHECK(f.in_validity_interval(0.5));
  CHECK_FALSE(f.in_validity_interval(1.5));
  CHECK(f.derivative(0.5) == Approx(1.0).epsilon(1e-6));
  CHECK(error_kind([] { GeneratorSpec::custom({}); }) == ErrorKind::InvalidArgument);
}
