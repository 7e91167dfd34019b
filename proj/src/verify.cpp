#include "canonflow/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "canonflow/error.hpp"
#include "canonflow/flowcore.hpp"
#include "canonflow/gridspace.hpp"
#include "canonflow/hamiltonians.hpp"
#include "canonflow/metricmap.hpp"
#include "canonflow/propagators.hpp"

namespace canonflow {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void upper(CheckResult& r, std::string name, double value, double bound) {
  r.metrics.push_back({std::move(name), value, bound, true});
}
void lower(CheckResult& r, std::string name, double value, double bound) {
  r.metrics.push_back({std::move(name), value, bound, false});
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct FlowSample {
  double eps, x;
};

// In-domain (eps, x) pairs; the quadratic flow is kept away from its pole.
std::vector<FlowSample> flow_samples(const GeneratorSpec& f, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ue(-1.0, 1.0), ux(-3.0, 3.0);
  std::vector<FlowSample> out;
  while (out.size() < count) {
    const FlowSample s{ue(rng), ux(rng)};
    if (std::holds_alternative<QuadraticGenerator>(f.variant()) && s.eps * s.x > 0.8) continue;
    if (const auto* e = std::get_if<ExpDecayGenerator>(&f.variant())) {
      if (std::exp(e->lambda * s.x) + s.eps * e->lambda < 0.05 * std::exp(e->lambda * s.x)) continue;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<GeneratorSpec> standard_generators() {
  return {GeneratorSpec::linear(), GeneratorSpec::quadratic(), GeneratorSpec::exp_decay(1.0)};
}

SolvableFamily symmetric_family() { return SolvableFamily{1.0, 0.5, 0.5, 0.3, 2.0, false}; }

// W(t) psi = Q(chi(t)) U_dil(eps(t)) psi, the map into the static frame.
WaveFunction to_static_frame(const SolvableFamily& fam, double m_ref, double t,
                             const WaveFunction& psi) {
  const EpsilonProfile eps{fam.mass_profile(), m_ref};
  const Derivatives e = eps.at(t);
  return apply_quadratic_phase(m_ref * e.first,
                               apply_point_unitary(GeneratorSpec::linear(), e.value, psi));
}

Trajectory run_split_step(const SolvableFamily& fam, const WaveFunction& psi, double t0, double t1,
                          double dt) {
  return split_step_propagate(fam.mass_profile(), fam.frequency_profile(), psi,
                              TimeGrid::span(t0, t1, dt, std::size_t(-1)));
}

// ---------------------------------------------------------------- acceptance

void ac1_canonicality(CheckResult& r) {
  const auto t0 = Clock::now();
  double closed = 0.0, custom = 0.0;
  std::uint64_t seed = 11;
  for (const auto& f : standard_generators()) {
    const auto ode = f.as_custom();
    for (const auto& s : flow_samples(f, 100, seed++)) {
      closed = std::max(closed, std::abs(conjugation_factor(f, s.eps, s.x) *
                                             flow_jacobian(f, s.eps, s.x) - 1.0));
      const auto ev = evaluate_flow(ode, s.eps, s.x);
      custom = std::max(custom, std::abs(ev.f2 * ev.jacobian - 1.0));
    }
  }
  upper(r, "max |F2*J - 1| closed form", closed, 1e-12);
  upper(r, "max |F2*J - 1| ODE path", custom, 1e-8);
  upper(r, "wall time [s]", since(t0), 1.0);
}

void ac2_closed_forms(CheckResult& r) {
  double lin = 0.0, quad = 0.0, exp_pos = 0.0, exp_mom = 0.0, exp_ode = 0.0;
  double alt_gap = 0.0, alt_canon = 0.0;
  const auto lin_f = GeneratorSpec::linear();
  const auto quad_f = GeneratorSpec::quadratic();
  const double lam = 1.0;
  const auto exp_f = GeneratorSpec::exp_decay(lam);
  const auto exp_ode_f = exp_f.as_custom();
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (const auto& s : flow_samples(lin_f, 100, 21)) {
    lin = std::max({lin, rel(flow_map(lin_f, s.eps, s.x), std::exp(s.eps) * s.x),
                    rel(conjugation_factor(lin_f, s.eps, s.x), std::exp(-s.eps))});
  }
  for (const auto& s : flow_samples(quad_f, 100, 22)) {
    const double d = 1.0 - s.eps * s.x;
    quad = std::max({quad, rel(flow_map(quad_f, s.eps, s.x), s.x / d),
                     rel(conjugation_factor(quad_f, s.eps, s.x), d * d)});
  }
  for (const auto& s : flow_samples(exp_f, 100, 23)) {
    const double direct_x = std::log(std::exp(lam * s.x) + s.eps * lam) / lam;
    exp_pos = std::max(exp_pos, rel(flow_map(exp_f, s.eps, s.x), direct_x));
    const double f2 = conjugation_factor(exp_f, s.eps, s.x);
    exp_mom = std::max(exp_mom, rel(f2, 1.0 + s.eps * lam * std::exp(-lam * s.x)));
    exp_ode = std::max(exp_ode, rel(f2, conjugation_factor(exp_ode_f, s.eps, s.x)));
    const double alt_w = 1.0 + s.eps * std::exp(lam * s.x) / lam;
    alt_gap = std::max(alt_gap, std::abs(alt_w - f2) / f2);
    alt_canon = std::max(alt_canon,
                             std::abs(alt_w * flow_jacobian(exp_f, s.eps, s.x) - 1.0));
  }
  upper(r, "f=x: x'=e^eps x, p' weight e^-eps (rel)", lin, 1e-14);
  upper(r, "f=x^2: x'=x/(1-eps x), F2=(1-eps x)^2 (rel)", quad, 1e-14);
  upper(r, "f=e^-x: x'=ln(e^x+eps)/1 (rel)", exp_pos, 1e-13);
  upper(r, "f=e^-x: F2 = 1+eps e^-x (rel)", exp_mom, 1e-14);
  upper(r, "f=e^-x: F2 closed vs ODE oracle (rel)", exp_ode, 1e-8);
  r.notes.push_back("the momentum weight 1+eps e^{x} differs from the flow-derived F2 by up to " +
                    num(alt_gap) + " (relative); it violates F2*J = 1 by up to " +
                    num(alt_canon));
}

void ac3_brackets(CheckResult& r) {
  const auto t0 = Clock::now();
  // Products such as x^2 e^{-x} multiply the spectral round-off floor far from
  // the probes, so narrow probes on a short grid keep that growth bounded.
  const Grid grid = Grid::over(-6.0, 8.0, 256);
  std::vector<WaveFunction> probes;
  for (const GaussianState& g : {GaussianState{2.0, 0.0, 0.0, 0.0},
                                 GaussianState{3.0, 0.5, -1.0, 0.0},
                                 GaussianState{cplx(2.5, 0.5), -0.3, 0.8, 0.2}}) {
    probes.push_back(g.rasterize(grid));
  }
  const std::pair<GeneratorSpec, GeneratorSpec> pairs[] = {
      {GeneratorSpec::linear(), GeneratorSpec::quadratic()},
      {GeneratorSpec::quadratic(), GeneratorSpec::exp_decay(1.0)},
      {GeneratorSpec::linear(), GeneratorSpec::constant(1.0)}};
  for (const auto& [f1, f2] : pairs) {
    const auto rep = verify_bracket_identities(f1, f2, grid, probes);
    const std::string tag = "(" + f1.name() + ", " + f2.name() + ")";
    upper(r, "[{f1,p},f2] residual " + tag, rep.first_residual, 1e-8);
    upper(r, "[{f1,p},{f2,p}] residual " + tag, rep.second_residual, 1e-8);
  }
  upper(r, "wall time [s]", since(t0), 5.0);
}

void ac4_reduction(CheckResult& r) {
  const SolvableFamily fam = symmetric_family();
  const MassProfile m = fam.mass_profile();
  const FrequencyProfile w = fam.frequency_profile();
  const double m0 = m.at(0.0).value;
  double da = 0.0, db = 0.0, dc = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.05 * k;
    const QuadraticHamiltonian h = reduced_hamiltonian(m, w, t, m0);
    da = std::max(da, std::abs(h.a - 0.5 / m0));
    db = std::max(db, std::abs(h.b - 0.5 * m0 * 4.0));
    dc = std::max(dc, std::abs(h.c));
  }
  upper(r, "max |a - 1/(2 m0)|", da, 1e-10);
  upper(r, "max |b - m0 Omega0^2/2|", db, 1e-10);
  upper(r, "max |c|", dc, 1e-10);
}

void ac5_caldirola_kanai(CheckResult& r) {
  const auto t0 = Clock::now();
  const SolvableFamily fam = SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0);
  const Grid grid = Grid::over(-12.0, 12.0, 2048);
  const WaveFunction psi0 = GaussianState{1.0, 1.0, 0.0, 0.0}.rasterize(grid);
  const WaveFunction exact = exact_solvable_propagate(fam, psi0, 5.0);
  const Trajectory num = run_split_step(fam, psi0, 0.0, 5.0, 1e-3);
  upper(r, "omega - sqrt(1.01)", std::abs(fam.omega() - std::sqrt(1.01)), 1e-15);
  upper(r, "1 - fidelity exact vs split-step", 1.0 - fidelity(exact, num.final_state), 1e-6);
  upper(r, "norm drift", num.report.max_norm_drift, 1e-8);
  upper(r, "wall time [s]", since(t0), 10.0);
}

void ac6_solvability(CheckResult& r) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> umn(0.2, 1.0), ua(0.1, 0.5), uo(0.5, 2.0);
  double closed = 0.0, fd = 0.0, omega_var = 0.0;
  for (int j = 0; j < 20; ++j) {
    SolvableFamily fam{1.0, umn(rng), umn(rng), ua(rng), uo(rng), false};
    const MassProfile exact = fam.mass_profile();
    const MassProfile sampled{
        TimeProfile::sampled([fam](double t) { return solvable_mass(fam, t).value; }, 1.0)};
    const double m_ref = exact.at(0.0).value;
    const EpsilonProfile eps_fd{sampled, m_ref};
    const double w0 = omega_from_mass(exact, fam.Omega0, 0.0);
    for (int k = 0; k <= 50; ++k) {
      const double t = 0.1 * k;
      closed = std::max(closed, std::abs(solvability_residual(fam, t)));
      const Derivatives e = eps_fd.at(t);
      fd = std::max(fd, std::abs(e.second - e.first * e.first + fam.alpha_squared()));
      omega_var = std::max(omega_var, std::abs(omega_from_mass(exact, fam.Omega0, t) - w0));
    }
  }
  upper(r, "max residual, closed-form derivatives", closed, 1e-8);
  upper(r, "max residual, finite differences", fd, 1e-6);
  upper(r, "max |omega(t) - omega(0)|", omega_var, 1e-8);
}

void ac7_spectrum(CheckResult& r) {
  const Grid grid = Grid::over(-10.0, 10.0, 1024);
  const StandardHamiltonian h{1.0, [](double x) { return 0.5 * x * x; }, 0.5};
  const BandedMatrix mat = TransformedOperator(h, GeneratorSpec::linear(), 0.0, 0.0).assemble(grid);
  const auto ev = lowest_eigenvalues(mat, 8);
  double worst = ev.size() == 8 ? 0.0 : 1.0;
  for (std::size_t n = 0; n < ev.size(); ++n) {
    const double e = static_cast<double>(n) + 0.5;
    worst = std::max(worst, std::abs(ev[n] - e) / e);
  }
  upper(r, "max relative eigenvalue error, first 8", worst, 1e-4);

  const Grid wide = Grid::over(-16.0, 16.0, 1024);
  const HermiteBasis basis = HermiteBasis::fitted(wide, 1.0, 1.0);
  const WaveFunction psi = GaussianState{1.3, 1.0, 0.5, 0.0}.rasterize(wide);
  const WaveFunction spectral = hermite_propagate(psi, basis, 2.0);
  const SolvableFamily stat{1.0, 1.0, 0.0, 0.0, 1.0, false};
  const WaveFunction split = run_split_step(stat, psi, 0.0, 2.0, 1e-3).final_state;
  upper(r, "1 - fidelity Hermite vs split-step", 1.0 - fidelity(spectral, split), 1e-7);
}

EquivalenceReport metric_equivalence_run(bool halving) {
  const Grid grid = Grid::over(-10.0, 20.0, 2048);
  const WaveFunction psi0 = GaussianState{1.0, 5.0, 2.0, 0.0}.rasterize(grid);
  EquivalenceOptions opts;
  opts.dt = 1e-3;
  opts.halving_check = halving;
  return verify_metric_equivalence(GeneratorSpec::exp_decay(1.0), 0.4, psi0, 1.0, opts);
}

void ac8_metric_equivalence(CheckResult& r) {
  const auto t0 = Clock::now();
  const MetricProfile g = metric_from_generator(GeneratorSpec::exp_decay(1.0), 0.4);
  double gerr = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double x = -4.0 + 0.08 * k;
    const double expect = std::pow(1.0 + 0.4 * std::exp(-x), -2.0);
    gerr = std::max(gerr, std::abs(g(x) - expect) / expect);
  }
  const EquivalenceReport rep = metric_equivalence_run(true);
  upper(r, "g = (1+0.4e^-x)^-2 (rel)", gerr, 1e-13);
  upper(r, "1 - fidelity CN vs U free U^dagger", 1.0 - rep.fidelity, 1e-4);
  lower(r, "halving ratio lower", rep.halving_ratio.value_or(0.0), 3.2);
  upper(r, "halving ratio upper", rep.halving_ratio.value_or(0.0), 4.8);
  upper(r, "wall time [s]", since(t0), 30.0);
}

void ac9_inverse(CheckResult& r) {
  const auto f = GeneratorSpec::exp_decay(1.0);
  const double eps = 0.4;
  const MetricProfile g = metric_from_generator(f, eps);
  InverseOptions io;
  io.anchor_image = flow_map(f, eps, 0.0);
  const InverseResult inv = generator_from_metric(g, eps, 0.0, -4.5, 5.0, io);
  const MetricProfile back = metric_from_generator(inv.generator, eps);
  double phi_err = 0.0, g_err = 0.0;
  for (int k = 0; k <= 160; ++k) {
    const double x = -4.0 + 0.05 * k;
    phi_err = std::max(phi_err, std::abs(inv.flow(x) - flow_map(f, eps, x)));
    g_err = std::max(g_err, std::abs(back(x) - g(x)));
  }
  upper(r, "sup |phi_recovered - phi| on [-4,4]", phi_err, 1e-6);
  upper(r, "sup |g_roundtrip - g| on [-4,4]", g_err, 1e-6);
}

void ac10_gauge_affine(CheckResult& r) {
  double gauge = 0.0;
  for (SolvableFamily fam : {SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0), symmetric_family()}) {
    SolvableFamily doubled = fam;
    doubled.m0 *= 2.0;
    const auto w = fam.frequency_profile();
    const MassProfile m1 = fam.mass_profile(), m2 = doubled.mass_profile();
    for (int k = 0; k <= 50; ++k) {
      const double t = 0.1 * k;
      gauge = std::max(gauge, std::abs(effective_frequency(m1, w, t) - effective_frequency(m2, w, t)));
      // The reference mass itself is a gauge choice as well.
      const Derivatives e1 = EpsilonProfile{m1, 1.0}.at(t);
      const Derivatives e2 = EpsilonProfile{m1, 2.0}.at(t);
      const double w2 = w.at(t).value * w.at(t).value;
      gauge = std::max(gauge, std::abs(std::sqrt(e1.second - e1.first * e1.first + w2) -
                                       std::sqrt(e2.second - e2.first * e2.first + w2)));
    }
  }
  upper(r, "max |Omega(m0) - Omega(2 m0)|", gauge, 1e-12);

  const QuadraticHamiltonian h1 = QuadraticHamiltonian::standard_oscillator(1.0, 1.0);
  const QuadraticHamiltonian h2{0.3, 0.7, 0.2};
  auto gap = [&](double eps, double deps) {
    const auto lhs = dilation_transform(h1 + h2, eps, deps);
    const auto rhs = dilation_transform(h1, eps, deps) + dilation_transform(h2, eps, deps);
    return std::max({std::abs(lhs.a - rhs.a), std::abs(lhs.b - rhs.b), std::abs(lhs.c - rhs.c)});
  };
  upper(r, "additivity defect, deps = 0", gap(0.25, 0.0), 1e-15);
  lower(r, "additivity defect, deps = 0.4", gap(0.25, 0.4), 0.4 - 1e-12);
  upper(r, "additivity defect equals |deps|", std::abs(gap(0.25, 0.4) - 0.4), 1e-12);
}

// ---------------------------------------------------------------- flowcore

void fc_group_law(CheckResult& r) {
  double closed = 0.0, custom = 0.0, inv_c = 0.0, inv_o = 0.0;
  std::uint64_t seed = 101;
  for (const auto& f : standard_generators()) {
    const auto ode = f.as_custom();
    for (const auto& s : flow_samples(f, 40, seed++)) {
      const double e1 = 0.5 * s.eps, e2 = 0.3 * s.eps;
      const double a = flow_map(f, e2, flow_map(f, e1, s.x));
      const double b = flow_map(f, e1 + e2, s.x);
      closed = std::max(closed, std::abs(a - b) / std::max(1.0, std::abs(b)));
      const double ao = flow_map(ode, e2, flow_map(ode, e1, s.x));
      custom = std::max(custom, std::abs(ao - b) / std::max(1.0, std::abs(b)));
      inv_c = std::max(inv_c, std::abs(flow_map(f, -s.eps, flow_map(f, s.eps, s.x)) - s.x));
      inv_o = std::max(inv_o, std::abs(flow_map(ode, -s.eps, flow_map(ode, s.eps, s.x)) - s.x));
    }
  }
  upper(r, "group law, closed form", closed, 1e-9);
  upper(r, "group law, ODE path", custom, 1e-7);
  upper(r, "inversion, closed form", inv_c, 1e-9);
  upper(r, "inversion, ODE path", inv_o, 1e-7);
}

void fc_oracle(CheckResult& r) {
  double worst = 0.0;
  std::uint64_t seed = 201;
  for (const auto& f : standard_generators()) {
    const auto ode = f.as_custom();
    for (const auto& s : flow_samples(f, 100, seed++)) {
      const double a = flow_map(f, s.eps, s.x);
      worst = std::max(worst, std::abs(a - flow_map(ode, s.eps, s.x)) / std::max(1.0, std::abs(a)));
    }
  }
  upper(r, "closed form vs ODE flow", worst, 1e-8);
}

void fc_domain(CheckResult& r) {
  bool blew = false;
  try {
    flow_map(GeneratorSpec::quadratic(), 0.5, 2.0);
  } catch (const Error& e) {
    blew = e.kind() == ErrorKind::DomainBlowup;
  }
  bool ode_blew = false;
  try {
    flow_map(GeneratorSpec::quadratic().as_custom(), 0.5, 2.0);
  } catch (const Error& e) {
    ode_blew = e.kind() == ErrorKind::DomainBlowup || e.kind() == ErrorKind::StepFailure;
  }
  upper(r, "quadratic eps x = 1 raises DomainBlowup (0 = yes)", blew ? 0.0 : 1.0, 0.0);
  upper(r, "ODE path detects the escape (0 = yes)", ode_blew ? 0.0 : 1.0, 0.0);
  // Fixed point of f = x^2 at 0: F2 limit is e^{-eps f'(0)} = 1.
  upper(r, "fixed-point limit rule", std::abs(conjugation_factor(GeneratorSpec::quadratic(), 0.3, 0.0) - 1.0), 1e-15);
}

void fc_bracket_f3(CheckResult& r) {
  const auto h1 = bracket_f3(GeneratorSpec::linear(), GeneratorSpec::quadratic());
  const auto h2 = bracket_f3(GeneratorSpec::quadratic(), GeneratorSpec::quadratic());
  const auto h3 = bracket_f3(GeneratorSpec::linear(), GeneratorSpec::constant(1.0));
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  for (double x = -3.0; x <= 3.0; x += 0.25) {
    e1 = std::max(e1, std::abs(h1(x) - 2.0 * x * x));
    e2 = std::max(e2, std::abs(h2(x)));
    e3 = std::max(e3, std::abs(h3(x) + 2.0));
  }
  upper(r, "h(x, x^2) = 2x^2", e1, 1e-12);
  upper(r, "h(f, f) = 0", e2, 1e-12);
  upper(r, "h(x, 1) = -2", e3, 1e-12);
}

// ---------------------------------------------------------------- gridspace

void gs_unitarity(CheckResult& r) {
  const Grid grid = Grid::over(-16.0, 16.0, 1024);
  const WaveFunction psi = GaussianState{1.0, 0.5, 0.4, 0.0}.rasterize(grid);
  double worst = 0.0;
  for (double eps : {-0.5, -0.3, 0.3, 0.5}) {
    worst = std::max(worst, std::abs(apply_point_unitary(GeneratorSpec::linear(), eps, psi).norm() - 1.0));
  }
  const WaveFunction far = GaussianState{1.0, 7.0, 0.0, 0.0}.rasterize(grid);
  for (double eps : {0.2, 0.4}) {
    worst = std::max(worst, std::abs(apply_point_unitary(GeneratorSpec::exp_decay(1.0), eps, far).norm() - 1.0));
  }
  const WaveFunction q = apply_quadratic_phase(1.0, psi);
  double mod = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) mod = std::max(mod, std::abs(std::abs(q[k]) - std::abs(psi[k])));
  const WaveFunction back = apply_quadratic_phase(-1.0, q);
  upper(r, "point-unitary norm change", worst, 1e-9);
  upper(r, "quadratic phase |psi| change", mod, 1e-15);
  upper(r, "quadratic phase inverse pair", phase_aligned_distance(back, psi), 1e-14);
}

void gs_composition(CheckResult& r) {
  const Grid grid = Grid::over(-16.0, 16.0, 1024);
  const WaveFunction psi = GaussianState{1.0, 7.0, 0.4, 0.0}.rasterize(grid);
  double worst = 0.0;
  for (const auto& f : {GeneratorSpec::linear(), GeneratorSpec::exp_decay(1.0)}) {
    const WaveFunction a = apply_point_unitary(f, 0.3, apply_point_unitary(f, 0.2, psi));
    const WaveFunction b = apply_point_unitary(f, 0.5, psi);
    worst = std::max(worst, 1.0 - fidelity(a, b));
  }
  upper(r, "1 - fidelity of U(e2)U(e1) vs U(e1+e2)", worst, 1e-7);
}

void gs_moments(CheckResult& r) {
  const Grid grid = Grid::over(-16.0, 16.0, 1024);
  const WaveFunction psi = GaussianState{1.0, 0.7, 0.3, 0.0}.rasterize(grid);
  const double eps = 0.3;
  const WaveFunction u = apply_point_unitary(GeneratorSpec::linear(), eps, psi);
  const double x0 = expectation(Observable::x(), psi).value;
  const double x20 = expectation(Observable::x2(), psi).value;
  upper(r, "<x> law", std::abs(expectation(Observable::x(), u).value - std::exp(-eps) * x0), 1e-8);
  upper(r, "<x^2> law", std::abs(expectation(Observable::x2(), u).value - std::exp(-2 * eps) * x20), 1e-8);
  const WaveFunction ground = GaussianState{1.0, 0.0, 0.0, 0.0}.rasterize(grid);
  const double x2g = expectation(Observable::x2(), apply_point_unitary(GeneratorSpec::linear(), 0.3, ground)).value;
  upper(r, "ground-state <x^2> after eps = 0.3 vs 0.2744058180", std::abs(x2g - 0.2744058180), 1e-9);
  upper(r, "<p^2> of ground state vs 0.5", std::abs(expectation(Observable::p2(), ground).value - 0.5), 1e-12);
}

void gs_gaussian_rules(CheckResult& r) {
  const Grid grid = Grid::over(-16.0, 16.0, 1024);
  const GaussianState g{cplx(1.2, 0.2), 0.6, -0.5, 0.1};
  const WaveFunction psi = g.rasterize(grid);
  double worst = 0.0;
  for (double eps = -0.5; eps <= 0.5 + 1e-12; eps += 0.25) {
    worst = std::max(worst, 1.0 - fidelity(g.dilated(eps).rasterize(grid),
                                           apply_point_unitary(GeneratorSpec::linear(), eps, psi)));
    worst = std::max(worst, 1.0 - fidelity(g.chirped(eps).rasterize(grid), apply_quadratic_phase(eps, psi)));
  }
  upper(r, "1 - fidelity closed-form vs grid", worst, 1e-9);
}

// ---------------------------------------------------------------- hamiltonians

void hm_reduction(CheckResult& r) {
  double b_var = 0.0, shape = 0.0;
  for (const SolvableFamily& fam : {SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0), symmetric_family(),
                                    SolvableFamily{0.7, 0.4, 0.9, 0.25, 1.5, false},
                                    SolvableFamily{1.0, 1.0, 0.3, 0.4, 1.2, true}}) {
    const MassProfile m = fam.mass_profile();
    const FrequencyProfile w = fam.frequency_profile();
    const double m0 = m.at(0.0).value;
    const double b0 = reduced_hamiltonian(m, w, 0.0, m0).b;
    for (int k = 0; k <= 40; ++k) {
      const double t = 0.1 * k;
      const QuadraticHamiltonian h = reduced_hamiltonian(m, w, t, m0);
      const double Om = effective_frequency(m, w, t);
      shape = std::max({shape, std::abs(h.a - 0.5 / m0), std::abs(h.c),
                        std::abs(h.b - 0.5 * m0 * Om * Om)});
      b_var = std::max(b_var, std::abs(h.b - b0));
    }
  }
  upper(r, "(a,b,c) = (1/2m0, m0 Omega^2/2, 0)", shape, 1e-10);
  upper(r, "b constant in t", b_var, 1e-10);
}

void hm_caldirola(CheckResult& r) {
  const double gamma = 0.2, Omega0 = 1.0;
  const SolvableFamily fam = SolvableFamily::caldirola_kanai(1.0, gamma, Omega0);
  double m_err = 0.0;
  for (int k = 0; k <= 50; ++k) {
    const double t = 0.1 * k;
    m_err = std::max(m_err, std::abs(solvable_mass(fam, t).value / std::exp(gamma * t) - 1.0));
  }
  upper(r, "m(t) = e^{gamma t}", m_err, 1e-14);
  upper(r, "Omega0^2 = omega^2 - gamma^2/4",
        std::abs(Omega0 * Omega0 - (fam.omega() * fam.omega() - gamma * gamma / 4.0)), 1e-14);
  const MassProfile m{TimeProfile::exponential(1.0, gamma)};
  const FrequencyProfile w{TimeProfile::constant(std::sqrt(1.01))};
  double om = 0.0;
  for (int k = 0; k <= 50; ++k) om = std::max(om, std::abs(effective_frequency(m, w, 0.1 * k) - 1.0));
  upper(r, "Omega = 1 for m = e^{0.2t}, omega = sqrt(1.01)", om, 1e-14);
}

void hm_general_f(CheckResult& r) {
  const Grid grid = Grid::over(-6.0, 10.0, 512);
  const StandardHamiltonian free{1.0, {}, std::nullopt};
  const auto f = GeneratorSpec::exp_decay(1.0);
  const BandedMatrix a = TransformedOperator(free, f, 0.4, 0.0).assemble(grid);
  const BandedMatrix b = curved_hamiltonian_matrix(metric_from_generator(f, 0.4), 1.0, grid);
  upper(r, "general-f assembly vs curved metric (rel)", a.max_abs_difference(b) / b.max_abs(), 1e-12);
  upper(r, "hermiticity residual", a.hermiticity_residual(), 0.0);

  const StandardHamiltonian osc{1.0, [](double x) { return 0.5 * x * x; }, 0.5};
  const auto q = TransformedOperator(osc, GeneratorSpec::linear(), 0.1, 0.2).as_quadratic();
  const auto d = dilation_transform(QuadraticHamiltonian::standard_oscillator(1.0, 1.0), 0.1, 0.2);
  upper(r, "f = x reproduces the dilation coefficients",
        q ? std::max({std::abs(q->a - d.a), std::abs(q->b - d.b), std::abs(q->c - d.c)}) : 1.0, 1e-15);
}

// ---------------------------------------------------------------- propagators

void pr_trans_u(CheckResult& r) {
  const SolvableFamily fam = SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0);
  const Grid grid = Grid::over(-12.0, 12.0, 1024);
  const HermiteBasis basis = HermiteBasis::fitted(grid, 1.0, 1.0);
  const double T = 3.0;
  double worst = 0.0;
  for (const GaussianState& g : {GaussianState{1.0, 1.0, 0.0, 0.0}, GaussianState{1.5, -0.5, 0.5, 0.0},
                                 GaussianState{0.7, 0.0, -1.0, 0.0},
                                 GaussianState{cplx(1.0, 0.4), 0.8, 0.3, 0.0},
                                 GaussianState{2.0, -1.0, -0.4, 0.0}}) {
    const WaveFunction psi = g.rasterize(grid);
    const WaveFunction lhs = to_static_frame(fam, 1.0, T, run_split_step(fam, psi, 0.0, T, 2e-3).final_state);
    const WaveFunction rhs = hermite_propagate(to_static_frame(fam, 1.0, 0.0, psi), basis, T);
    worst = std::max(worst, 1.0 - fidelity(lhs, rhs));
  }
  upper(r, "1 - fidelity W(t) U(t) psi vs e^{-iH''t} W(0) psi", worst, 1e-5);
}

void pr_exact_vs_numeric(CheckResult& r) {
  const Grid grid = Grid::over(-12.0, 12.0, 2048);
  const WaveFunction psi0 = GaussianState{1.0, 1.0, 0.0, 0.0}.rasterize(grid);
  double worst = 0.0, gauss = 0.0, gauge = 0.0;
  for (const SolvableFamily& fam : {SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0), symmetric_family(),
                                    SolvableFamily{1.0, 1.0, 0.3, 0.4, 1.2, true}}) {
    const double T = 3.0;
    const WaveFunction exact = exact_solvable_propagate(fam, psi0, T);
    worst = std::max(worst, 1.0 - fidelity(exact, run_split_step(fam, psi0, 0.0, T, 1e-3).final_state));
    const GaussianState g = gaussian_exact_propagate(fam, GaussianState{1.0, 1.0, 0.0, 0.0}, T);
    gauss = std::max(gauss, 1.0 - fidelity(g.rasterize(grid), exact));
    ExactOptions alt;
    alt.m_ref = 2.0 * solvable_mass(fam, 0.0).value;
    gauge = std::max(gauge, 1.0 - fidelity(exact_solvable_propagate(fam, psi0, T, alt), exact));
  }
  upper(r, "1 - fidelity exact vs split-step", worst, 1e-6);
  upper(r, "1 - fidelity Gaussian closed form vs grid pipeline", gauss, 1e-8);
  upper(r, "1 - fidelity under m0 -> 2 m0", gauge, 1e-8);
}

void pr_time_reversal(CheckResult& r) {
  const SolvableFamily fam = SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0);
  const Grid grid = Grid::over(-12.0, 12.0, 1024);
  const WaveFunction psi0 = GaussianState{1.0, 1.0, 0.5, 0.0}.rasterize(grid);
  const WaveFunction fwd = run_split_step(fam, psi0, 0.0, 3.0, 2e-3).final_state;
  const WaveFunction back = run_split_step(fam, fwd, 3.0, 0.0, -2e-3).final_state;
  upper(r, "1 - fidelity after T and back", 1.0 - fidelity(back, psi0), 1e-6);
}

void pr_richardson(CheckResult& r) {
  const SolvableFamily fam = SolvableFamily::caldirola_kanai(1.0, 0.2, 1.0);
  const Grid grid = Grid::over(-12.0, 12.0, 512);
  const WaveFunction psi0 = GaussianState{1.0, 1.0, 0.0, 0.0}.rasterize(grid);
  const double ss = richardson_ratio(
      [&](double dt) { return run_split_step(fam, psi0, 0.0, 1.0, dt).final_state; }, 0.04);
  lower(r, "split-step ratio lower", ss, 3.2);
  upper(r, "split-step ratio upper", ss, 4.8);

  const Grid g2 = Grid::over(-15.0, 15.0, 1024);
  const WaveFunction p2 = GaussianState{1.0, 0.0, 1.0, 0.0}.rasterize(g2);
  const MetricProfile metric = MetricProfile::from_function(
      [](double x) { return std::pow(1.0 + 0.4 * std::exp(-0.3 * x * x), 2.0); });
  const double cn = richardson_ratio(
      [&](double dt) {
        return crank_nicolson_curved(metric, 1.0, p2, TimeGrid::span(0.0, 1.0, dt, std::size_t(-1))).final_state;
      },
      0.02);
  lower(r, "Crank-Nicolson ratio lower", cn, 3.2);
  upper(r, "Crank-Nicolson ratio upper", cn, 4.8);
}

void pr_hermite(CheckResult& r) {
  const Grid grid = Grid::over(-12.0, 12.0, 1024);
  const HermiteBasis basis = HermiteBasis::fitted(grid, 1.0, 1.0);
  upper(r, "Gram residual", basis.gram_residual(), 1e-8);
  const WaveFunction ground = GaussianState{1.0, 0.0, 0.0, 0.0}.rasterize(grid);
  const WaveFunction g1 = hermite_propagate(ground, basis, 1.7);
  upper(r, "ground state 1 - fidelity", 1.0 - fidelity(g1, ground), 1e-10);
  upper(r, "ground state phase e^{-i t/2}",
        std::abs(inner_product(ground, g1) - std::polar(1.0, -0.85)), 1e-10);
  const WaveFunction coh = GaussianState{1.0, 1.5, 0.5, 0.0}.rasterize(grid);
  const WaveFunction per = hermite_propagate(coh, basis, 2.0 * std::numbers::pi);
  upper(r, "1 - fidelity, coherent state after one period", 1.0 - fidelity(per, coh), 1e-9);
  upper(r, "norm preserved", std::abs(hermite_propagate(coh, basis, 1.3).norm() - coh.norm()), 1e-10);
  const WaveFunction stat = split_step_propagate({TimeProfile::constant(1.0)}, {TimeProfile::constant(1.0)},
                                                 ground, TimeGrid::span(0.0, 2.0, 1e-3, std::size_t(-1)))
                                .final_state;
  upper(r, "1 - fidelity, split-step eigenstate", 1.0 - fidelity(stat, ground), 1e-8);
}

void pr_cn_flat(CheckResult& r) {
  const Grid grid = Grid::over(-20.0, 20.0, 2048);
  const WaveFunction psi0 = GaussianState{1.0, 0.0, 1.0, 0.0}.rasterize(grid);
  const auto cn = crank_nicolson_curved(MetricProfile::constant(1.0), 1.0, psi0,
                                        TimeGrid::span(0.0, 1.0, 1e-3, std::size_t(-1)));
  const WaveFunction free = split_step_propagate({TimeProfile::constant(1.0)}, {TimeProfile::constant(0.0)},
                                                 psi0, TimeGrid::span(0.0, 1.0, 1.0))
                                .final_state;
  upper(r, "1 - fidelity CN(g=1) vs free evolution", 1.0 - fidelity(cn.final_state, free), 1e-7);
  upper(r, "CN norm drift", cn.report.max_norm_drift, 1e-10);
}

// ---------------------------------------------------------------- metricmap

void mm_roundtrip_quadratic(CheckResult& r) {
  const auto f = GeneratorSpec::quadratic();
  const double eps = 0.2;
  const MetricProfile g = metric_from_generator(f, eps);
  InverseOptions io;
  io.anchor_image = flow_map(f, eps, 1.0);
  const InverseResult inv = generator_from_metric(g, eps, 1.0, 0.5, 4.0, io);
  const MetricProfile back = metric_from_generator(inv.generator, eps);
  double g_err = 0.0, phi_err = 0.0;
  for (int k = 0; k <= 34; ++k) {
    const double x = 0.5 + 0.05 * k;
    g_err = std::max(g_err, std::abs(back(x) - g(x)) / g(x));
    phi_err = std::max(phi_err, std::abs(inv.flow(x) - flow_map(f, eps, x)));
  }
  upper(r, "g round trip (rel) on [0.5, 2.2]", g_err, 1e-6);
  upper(r, "phi recovery on [0.5, 2.2]", phi_err, 1e-6);
}

void mm_flat(CheckResult& r) {
  const InverseResult inv = generator_from_metric(MetricProfile::constant(1.0), 0.3, 0.0, -5.0, 5.0);
  double f_dev = 0.0, shift = 0.0, g_dev = 0.0;
  const MetricProfile back = metric_from_generator(inv.generator, 0.3);
  for (double x = -4.0; x <= 4.0; x += 0.5) {
    f_dev = std::max(f_dev, std::abs(inv.generator.value(x) - 1.0));
    shift = std::max(shift, std::abs(inv.flow(x) - x - 0.3));
    g_dev = std::max(g_dev, std::abs(back(x) - 1.0));
  }
  double fwd = 0.0;
  const MetricProfile from_shift = metric_from_generator(GeneratorSpec::constant(0.7), 0.5);
  for (double x = -4.0; x <= 4.0; x += 0.5) fwd = std::max(fwd, std::abs(from_shift(x) - 1.0));
  upper(r, "f = 1 recovered from g = 1", f_dev, 1e-12);
  upper(r, "phi is the shift x + eps", shift, 1e-12);
  upper(r, "round-trip g = 1", g_dev, 1e-10);
  upper(r, "shift flow gives g = 1", fwd, 1e-12);
}

void mm_conjugation(CheckResult& r) {
  const Grid grid = Grid::over(-10.0, 20.0, 2048);
  const auto f = GeneratorSpec::exp_decay(1.0);
  const BandedMatrix hg = curved_hamiltonian_matrix(metric_from_generator(f, 0.4), 1.0, grid);
  const BandedMatrix hf = curved_hamiltonian_matrix(MetricProfile::constant(1.0), 1.0, grid);
  double worst = 0.0;
  for (const GaussianState& g : {GaussianState{1.0, 5.0, 0.0, 0.0}, GaussianState{1.5, 6.0, 1.0, 0.0},
                                 GaussianState{0.8, 4.5, -0.5, 0.0}}) {
    const WaveFunction psi = g.rasterize(grid);
    const auto lhs = hg.apply(psi.values());
    const WaveFunction y = apply_point_unitary_adjoint(f, 0.4, psi);
    PointUnitaryOptions loose;
    loose.leak_tolerance = 1.0;  // H_free y is not normalized
    const auto rhs = apply_point_unitary(f, 0.4, WaveFunction(grid, hf.apply(y.values())), loose);
    double d = 0.0, s = 0.0;
    for (std::size_t k = 0; k < lhs.size(); ++k) {
      d += std::norm(lhs[k] - rhs[k]);
      s += std::norm(lhs[k]);
    }
    worst = std::max(worst, std::sqrt(d / s));
  }
  upper(r, "||H_g psi - U H_free U^dagger psi|| / ||H_g psi||", worst, 1e-6);
}

void mm_equivalence_cases(CheckResult& r) {
  const Grid grid = Grid::over(-10.0, 20.0, 2048);
  const WaveFunction slow = GaussianState{1.0, 5.0, 0.0, 0.0}.rasterize(grid);
  const auto zero = verify_metric_equivalence(GeneratorSpec::exp_decay(1.0), 0.0, slow, 1.0);
  upper(r, "eps = 0: 1 - fidelity", 1.0 - zero.fidelity, 1e-10);
  const Grid g2 = Grid::over(-20.0, 20.0, 2048);
  const WaveFunction psi = GaussianState{1.0, 0.5, 1.0, 0.0}.rasterize(g2);
  const auto lin = verify_metric_equivalence(GeneratorSpec::linear(), 0.3, psi, 1.0);
  upper(r, "f = x, eps = 0.3: 1 - fidelity", 1.0 - lin.fidelity, 1e-4);
  const MetricProfile g = metric_from_generator(GeneratorSpec::linear(), 0.3);
  upper(r, "f = x gives constant g = e^{2 eps}", std::abs(g(1.7) - std::exp(0.6)) + std::abs(g(-2.0) - std::exp(0.6)), 1e-13);
}

Check make(std::string id, std::string module, std::string title, void (*body)(CheckResult&)) {
  return {std::move(id), std::move(module), std::move(title), body};
}

}  // namespace

std::vector<Check> acceptance_checks() {
  return {
      make("AC1", "flowcore", "canonicality F2 * phi' = 1", ac1_canonicality),
      make("AC2", "flowcore", "closed-form flows and weights", ac2_closed_forms),
      make("AC3", "gridspace", "bracket identities on Gaussian probes", ac3_brackets),
      make("AC4", "hamiltonians", "reduction chain to the static oscillator", ac4_reduction),
      make("AC5", "propagators", "Caldirola-Kanai exact vs split-step", ac5_caldirola_kanai),
      make("AC6", "hamiltonians", "solvability condition on random families", ac6_solvability),
      make("AC7", "propagators", "static-oscillator spectrum and Hermite phases", ac7_spectrum),
      make("AC8", "metricmap", "free <-> curved metric equivalence", ac8_metric_equivalence),
      make("AC9", "metricmap", "inverse problem round trip", ac9_inverse),
      make("AC10", "hamiltonians", "m0 gauge invariance and affine law", ac10_gauge_affine),
  };
}

std::vector<Check> property_checks() {
  return {
      make("flowcore.group_law", "flowcore", "group law and inversion", fc_group_law),
      make("flowcore.oracle", "flowcore", "closed forms vs ODE oracle", fc_oracle),
      make("flowcore.domain", "flowcore", "domain errors and fixed-point limits", fc_domain),
      make("flowcore.bracket_f3", "flowcore", "bracket function h", fc_bracket_f3),
      make("gridspace.unitarity", "gridspace", "norm preservation", gs_unitarity),
      make("gridspace.composition", "gridspace", "point-unitary composition", gs_composition),
      make("gridspace.moments", "gridspace", "dilation moment law", gs_moments),
      make("gridspace.gaussian_rules", "gridspace", "Gaussian closed-form rules", gs_gaussian_rules),
      make("hamiltonians.reduction", "hamiltonians", "full reduction to (1/2m0, m0 Omega^2/2, 0)", hm_reduction),
      make("hamiltonians.caldirola_kanai", "hamiltonians", "Caldirola-Kanai consistency", hm_caldirola),
      make("hamiltonians.general_f", "hamiltonians", "general-f operator assembly", hm_general_f),
      make("propagators.trans_u", "propagators", "static-frame conjugation of the numerical propagator", pr_trans_u),
      make("propagators.exact_vs_numeric", "propagators", "exact pipeline vs split-step", pr_exact_vs_numeric),
      make("propagators.time_reversal", "propagators", "time reversal", pr_time_reversal),
      make("propagators.richardson", "propagators", "second-order convergence", pr_richardson),
      make("propagators.hermite", "propagators", "Hermite basis propagation", pr_hermite),
      make("propagators.cn_flat", "propagators", "Crank-Nicolson flat metric", pr_cn_flat),
      make("metricmap.roundtrip_quadratic", "metricmap", "inverse problem, f = x^2", mm_roundtrip_quadratic),
      make("metricmap.flat", "metricmap", "flat fixed point", mm_flat),
      make("metricmap.conjugation", "metricmap", "operator conjugation identity", mm_conjugation),
      make("metricmap.equivalence_cases", "metricmap", "equivalence special cases", mm_equivalence_cases),
  };
}

std::vector<Check> suite_checks(const std::string& suite) {
  if (suite == "acceptance") return acceptance_checks();
  if (suite == "per-module") return property_checks();
  std::vector<Check> all = acceptance_checks();
  auto props = property_checks();
  if (suite == "all") {
    all.insert(all.end(), props.begin(), props.end());
    return all;
  }
  std::vector<Check> out;
  for (auto& c : all) {
    if (c.module == suite) out.push_back(c);
  }
  for (auto& c : props) {
    if (c.module == suite) out.push_back(c);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "verify", "unknown suite '" + suite + "'");
  return out;
}

std::vector<CheckResult> run_checks(const std::vector<Check>& checks, unsigned threads) {
  std::vector<CheckResult> results(checks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < checks.size(); i = next++) {
      CheckResult& r = results[i];
      r.id = checks[i].id;
      r.module = checks[i].module;
      r.title = checks[i].title;
      const auto t0 = Clock::now();
      try {
        checks[i].body(r);
        r.passed = std::all_of(r.metrics.begin(), r.metrics.end(),
                               [](const Metric& m) { return m.passed(); });
      } catch (const Error& e) {
        r.error = std::string(to_string(e.kind())) + " (" + e.module() + "): " + e.what();
        r.passed = false;
      } catch (const std::exception& e) {
        r.error = e.what();
        r.passed = false;
      }
      r.wall_time = since(t0);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(checks.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace canonflow
