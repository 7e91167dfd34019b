#include "canonflow/hamiltonians.hpp"

#include <cmath>
#include <algorithm>
#include <sstream>

#include "canonflow/error.hpp"

namespace canonflow {
namespace {

constexpr const char* kModule = "hamiltonians";

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

BandedMatrix sum(const BandedMatrix& x, const BandedMatrix& y, double sy) {
  const std::size_t n = x.size();
  const std::size_t w = std::max(x.bandwidth(), y.bandwidth());
  BandedMatrix out(n, w);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > w ? i - w : 0;
    const std::size_t hi = std::min(n - 1, i + w);
    for (std::size_t j = lo; j <= hi; ++j) out.add(i, j, x.at(i, j) + sy * y.at(i, j));
  }
  return out;
}

}  // namespace

TimeProfile TimeProfile::constant(double value) {
  return TimeProfile([value](double) { return Derivatives{value, 0.0, 0.0}; });
}

TimeProfile TimeProfile::exponential(double initial, double rate) {
  return TimeProfile([initial, rate](double t) {
    const double v = initial * std::exp(rate * t);
    return Derivatives{v, rate * v, rate * rate * v};
  });
}

TimeProfile TimeProfile::closed_form(Evaluator eval) {
  if (!eval) throw Error(ErrorKind::InvalidArgument, kModule, "empty time profile");
  return TimeProfile(std::move(eval));
}

TimeProfile TimeProfile::sampled(std::function<double(double)> fn, double timescale) {
  if (!fn) throw Error(ErrorKind::InvalidArgument, kModule, "empty time profile");
  if (!(timescale > 0.0)) throw Error(ErrorKind::InvalidArgument, kModule, "timescale must be positive");
  const double h = 1e-4 * timescale;
  return TimeProfile([fn = std::move(fn), h](double t) {
    const double f0 = fn(t);
    const double fp1 = fn(t + h), fm1 = fn(t - h);
    const double fp2 = fn(t + 2 * h), fm2 = fn(t - 2 * h);
    const double d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
    const double d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    return Derivatives{f0, d1, d2};
  });
}

Derivatives MassProfile::at(double t) const {
  const Derivatives d = profile.at(t);
  if (!(d.value > 0.0) || !std::isfinite(d.value)) {
    throw Error(ErrorKind::MassZeroCrossing, kModule, "mass profile is not positive at t = " + fmt(t));
  }
  return d;
}

Derivatives EpsilonProfile::at(double t) const {
  const Derivatives m = mass.at(t);
  const double r1 = m.first / m.value;
  const double r2 = m.second / m.value;
  return {0.5 * std::log(m_ref / m.value), -0.5 * r1, -0.5 * r2 + 0.5 * r1 * r1};
}

double EpsilonProfile::chi(double t) const { return m_ref * at(t).first; }
double EpsilonProfile::chi_dot(double t) const { return m_ref * at(t).second; }

SolvableFamily SolvableFamily::caldirola_kanai(double m0, double gamma, double Omega0) {
  return SolvableFamily{m0, 1.0, 0.0, 0.5 * gamma, Omega0, false};
}

void SolvableFamily::validate() const {
  if (!(m0 > 0.0) || !std::isfinite(m0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "family needs m0 > 0");
  }
  if (!(Omega0 > 0.0) || !std::isfinite(Omega0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "family needs Omega0 > 0");
  }
  if (!std::isfinite(mu) || !std::isfinite(nu) || (mu == 0.0 && nu == 0.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "family needs finite mu, nu, not both zero");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "family needs alpha >= 0");
  }
  if (!(Omega0 * Omega0 + alpha_squared() > 0.0)) {
    throw Error(ErrorKind::ImaginaryFrequency, kModule,
                "oscillatory family needs beta < Omega0 for a real frequency");
  }
}

double SolvableFamily::omega() const { return std::sqrt(Omega0 * Omega0 + alpha_squared()); }

MassProfile SolvableFamily::mass_profile() const {
  validate();
  const SolvableFamily fam = *this;
  return MassProfile{TimeProfile::closed_form([fam](double t) { return solvable_mass(fam, t); })};
}

FrequencyProfile SolvableFamily::frequency_profile() const {
  validate();
  return FrequencyProfile{TimeProfile::constant(omega())};
}

QuadraticHamiltonian dilation_transform(const QuadraticHamiltonian& h, double eps, double deps) {
  return {h.a * std::exp(-2.0 * eps), h.b * std::exp(2.0 * eps), h.c - deps};
}

QuadraticHamiltonian quadratic_phase_transform(const QuadraticHamiltonian& h, double chi,
                                               double dchi) {
  return {h.a, h.b + h.a * chi * chi + h.c * chi + 0.5 * dchi, h.c + 2.0 * h.a * chi};
}

double effective_frequency(const MassProfile& m, const FrequencyProfile& omega, double t) {
  const EpsilonProfile eps{m, m.at(0.0).value};
  const Derivatives e = eps.at(t);
  const double w = omega.at(t).value;
  const double radicand = e.second - e.first * e.first + w * w;
  if (!(radicand >= 0.0)) {
    throw Error(ErrorKind::ImaginaryFrequency, kModule,
                "eps'' - eps'^2 + omega^2 = " + fmt(radicand) + " < 0 at t = " + fmt(t) +
                    " (inverted effective oscillator)");
  }
  return std::sqrt(radicand);
}

double omega_from_mass(const MassProfile& m, double Omega0, double t) {
  const Derivatives d = m.at(t);
  const double r = d.first / (2.0 * d.value);
  const double radicand = Omega0 * Omega0 + d.second / (2.0 * d.value) - r * r;
  if (!(radicand >= 0.0)) {
    throw Error(ErrorKind::NegativeRadicand, kModule,
                "Omega0^2 + m''/2m - (m'/2m)^2 = " + fmt(radicand) + " < 0 at t = " + fmt(t));
  }
  return std::sqrt(radicand);
}

Derivatives solvable_mass(const SolvableFamily& family, double t) {
  const double a = family.alpha;
  double s, ds, dds;
  if (family.oscillatory) {
    const double c = std::cos(a * t), sn = std::sin(a * t);
    s = family.mu * c + family.nu * sn;
    ds = a * (-family.mu * sn + family.nu * c);
    dds = -a * a * s;
  } else {
    const double ep = std::exp(a * t), em = std::exp(-a * t);
    s = family.mu * ep + family.nu * em;
    ds = a * (family.mu * ep - family.nu * em);
    dds = a * a * s;
  }
  if (s == 0.0 || !std::isfinite(s)) {
    throw Error(ErrorKind::MassZeroCrossing, kModule, "family mass vanishes at t = " + fmt(t));
  }
  const double m0 = family.m0;
  return {m0 * s * s, 2.0 * m0 * s * ds, 2.0 * m0 * (ds * ds + s * dds)};
}

double solvability_residual(const SolvableFamily& family, double t) {
  const MassProfile m = family.mass_profile();
  const EpsilonProfile eps{m, m.at(0.0).value};
  const Derivatives e = eps.at(t);
  return e.second - e.first * e.first + family.alpha_squared();
}

QuadraticHamiltonian reduced_hamiltonian(const MassProfile& m, const FrequencyProfile& omega,
                                         double t, double m_ref) {
  const EpsilonProfile eps{m, m_ref};
  const Derivatives e = eps.at(t);
  const Derivatives md = m.at(t);
  const QuadraticHamiltonian h =
      QuadraticHamiltonian::standard_oscillator(md.value, omega.at(t).value);
  const QuadraticHamiltonian h1 = dilation_transform(h, e.value, e.first);
  return quadratic_phase_transform(h1, m_ref * e.first, m_ref * e.second);
}

TransformedOperator::TransformedOperator(StandardHamiltonian h, GeneratorSpec f, double eps,
                                         double deps)
    : h_(std::move(h)), f_(std::move(f)), eps_(eps), deps_(deps) {
  if (!(h_.mass > 0.0)) throw Error(ErrorKind::InvalidArgument, kModule, "mass must be positive");
}

double TransformedOperator::f2(double x) const { return conjugation_factor(f_, eps_, x); }

double TransformedOperator::transformed_potential(double x) const {
  if (!h_.potential) return 0.0;
  return h_.potential(flow_map(f_, eps_, x));
}

WaveFunction TransformedOperator::apply(const WaveFunction& psi) const {
  const Grid& grid = psi.grid();
  const std::size_t n = grid.size();
  const double dx = grid.dx();
  std::vector<double> w(n), sw(n), pot(n), fv(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = grid.x(k);
    const FlowEvaluation ev = evaluate_flow(f_, eps_, x);
    w[k] = ev.f2;
    sw[k] = std::sqrt(ev.f2);
    pot[k] = h_.potential ? h_.potential(ev.x_out) : 0.0;
    fv[k] = f_.value(x);
  }
  const auto v = psi.values();
  std::vector<cplx> u(n);
  for (std::size_t k = 0; k < n; ++k) u[k] = sw[k] * v[k];
  auto pu = apply_momentum(u, dx);
  for (std::size_t k = 0; k < n; ++k) pu[k] *= w[k];
  auto ppu = apply_momentum(pu, dx);

  std::vector<cplx> fpsi(n);
  for (std::size_t k = 0; k < n; ++k) fpsi[k] = fv[k] * v[k];
  const auto p_psi = apply_momentum(v, dx);
  const auto p_fpsi = apply_momentum(fpsi, dx);

  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx anti = fv[k] * p_psi[k] + p_fpsi[k];
    out[k] = sw[k] * ppu[k] / (2.0 * h_.mass) + pot[k] * v[k] - 0.5 * deps_ * anti;
  }
  return WaveFunction(grid, std::move(out));
}

BandedMatrix TransformedOperator::assemble(const Grid& grid, int order) const {
  const std::size_t n = grid.size();
  std::vector<double> outer(n), inner(n + 1), fv(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = grid.x(k);
    outer[k] = std::sqrt(f2(x));
    fv[k] = f_.value(x);
  }
  for (std::size_t r = 0; r <= n; ++r) {
    inner[r] = f2(grid.x0() + (static_cast<double>(r) - 0.5) * grid.dx());
  }
  BandedMatrix h = kinetic_sandwich(grid.dx(), outer, inner, h_.mass, order);
  for (std::size_t k = 0; k < n; ++k) h.add(k, k, transformed_potential(grid.x(k)));
  if (deps_ != 0.0) {
    h = sum(h, anticommutator_with_momentum(grid.dx(), fv, order), -0.5 * deps_);
  }
  return h;
}

std::optional<QuadraticHamiltonian> TransformedOperator::as_quadratic() const {
  if (!std::holds_alternative<LinearGenerator>(f_.variant()) || !h_.harmonic_b) {
    return std::nullopt;
  }
  return QuadraticHamiltonian{std::exp(-2.0 * eps_) / (2.0 * h_.mass),
                              *h_.harmonic_b * std::exp(2.0 * eps_), -deps_};
}

TransformedOperator general_f_transform(const StandardHamiltonian& h, const GeneratorSpec& f,
                                        double eps, double deps) {
  return TransformedOperator(h, f, eps, deps);
}

}  // namespace canonflow
