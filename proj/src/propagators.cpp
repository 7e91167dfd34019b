#include "canonflow/propagators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "canonflow/error.hpp"
#include "canonflow/spectral.hpp"

namespace canonflow {
namespace {

constexpr const char* kModule = "propagators";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double sum_sq(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

cplx phase(double arg) { return {std::cos(arg), std::sin(arg)}; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Moments {
  double norm = 0.0;
  double x = 0.0;
  double x2 = 0.0;
  double p = 0.0;
  double p2 = 0.0;
  double tail = 0.0;  // mass fraction with |k| > 0.9 k_max
};

// Position and momentum moments of an unnormalized state.
class MomentMeter {
 public:
  explicit MomentMeter(const Grid& grid)
      : grid_(grid), ft_(grid.size()), k_(wavenumbers(grid.size(), grid.dx())), hat_(grid.size()) {}

  Moments measure(std::span<const cplx> v) {
    Moments m;
    const double dx = grid_.dx();
    double s = 0.0, sx = 0.0, sx2 = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double w = std::norm(v[j]);
      const double x = grid_.x(j);
      s += w;
      sx += w * x;
      sx2 += w * x * x;
    }
    m.norm = std::sqrt(s * dx);
    if (s == 0.0) return m;
    m.x = sx / s;
    m.x2 = sx2 / s;
    ft_.forward(v, hat_);
    const double kmax = std::numbers::pi / dx;
    double h = 0.0, hp = 0.0, hp2 = 0.0, tail = 0.0;
    for (std::size_t j = 0; j < hat_.size(); ++j) {
      const double w = std::norm(hat_[j]);
      // The Nyquist mode carries no well-defined sign.
      const double kp = (hat_.size() % 2 == 0 && j == hat_.size() / 2) ? 0.0 : k_[j];
      h += w;
      hp += w * kp;
      hp2 += w * k_[j] * k_[j];
      if (std::abs(k_[j]) > 0.9 * kmax) tail += w;
    }
    m.p = hp / h;
    m.p2 = hp2 / h;
    m.tail = tail / h;
    return m;
  }

 private:
  Grid grid_;
  FourierTransform ft_;
  std::vector<double> k_;
  std::vector<cplx> hat_;
};

void check_resolution(const Moments& m, double tail_limit, double t) {
  if (m.tail > tail_limit) {
    throw Error(ErrorKind::ResolutionError, kModule,
                "spectral tail " + fmt(m.tail) + " exceeds " + fmt(tail_limit) + " at t = " +
                    fmt(t) + "; refine the grid");
  }
}

bool is_row_step(std::size_t step, const TimeGrid& time) {
  return step == time.steps || (time.stride > 0 && step % time.stride == 0);
}

std::vector<std::size_t> residual_sample_steps(std::size_t steps, std::size_t samples) {
  std::vector<std::size_t> out;
  if (steps == 0 || samples == 0) return out;
  samples = std::min(samples, steps);
  for (std::size_t j = 0; j < samples; ++j) {
    out.push_back(samples == 1 ? 0 : j * (steps - 1) / (samples - 1));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double relative_distance(std::span<const cplx> a, std::span<const cplx> b) {
  double d = 0.0, s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d += std::norm(a[k] - b[k]);
    s += std::norm(b[k]);
  }
  return s > 0.0 ? std::sqrt(d / s) : std::sqrt(d);
}

}  // namespace

HermiteBasis::HermiteBasis(const Grid& grid, std::size_t order, double m0, double Omega0)
    : grid_(grid), m0_(m0), Omega0_(Omega0) {
  if (!(m0 > 0.0) || !(Omega0 > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "Hermite basis needs m0 > 0 and Omega0 > 0");
  }
  if (order == 0) throw Error(ErrorKind::InvalidArgument, kModule, "Hermite basis needs order >= 1");
  const std::size_t n = grid.size();
  const double ell = length_scale();
  functions_.assign(order, std::vector<double>(n, 0.0));
  const double c0 = std::pow(std::numbers::pi, -0.25) / std::sqrt(ell);
  for (std::size_t k = 0; k < n; ++k) {
    const double xi = grid.x(k) / ell;
    functions_[0][k] = c0 * std::exp(-0.5 * xi * xi);
    if (order > 1) functions_[1][k] = std::sqrt(2.0) * xi * functions_[0][k];
    for (std::size_t j = 1; j + 1 < order; ++j) {
      const double jj = static_cast<double>(j);
      functions_[j + 1][k] = std::sqrt(2.0 / (jj + 1.0)) * xi * functions_[j][k] -
                             std::sqrt(jj / (jj + 1.0)) * functions_[j - 1][k];
    }
  }
}

std::size_t HermiteBasis::max_resolved_order(const Grid& grid, double m0, double Omega0) {
  const double ell = 1.0 / std::sqrt(m0 * Omega0);
  const double reach = std::min(-grid.x0(), grid.back());
  const double kmax = std::numbers::pi / grid.dx();
  if (!(reach > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "Hermite basis needs a grid containing x = 0");
  }
  const double margin = 5.0;
  // Classical turning points sqrt(2M+1) l in x and sqrt(2M+1)/l in k.
  const double sx = reach / ell - margin;
  const double sk = kmax * ell - margin;
  const double s = std::min(sx, sk);
  if (s < 1.0) return 1;
  const auto order = static_cast<std::size_t>(std::floor((s * s - 1.0) / 2.0)) + 1;
  return std::min<std::size_t>(order, 1024);
}

HermiteBasis HermiteBasis::fitted(const Grid& grid, double m0, double Omega0) {
  return HermiteBasis(grid, max_resolved_order(grid, m0, Omega0), m0, Omega0);
}

double HermiteBasis::gram_residual() const {
  const double dx = grid_.dx();
  double r = 0.0;
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    for (std::size_t j = i; j < functions_.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < grid_.size(); ++k) s += functions_[i][k] * functions_[j][k];
      s *= dx;
      r = std::max(r, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return r;
}

std::vector<cplx> HermiteBasis::coefficients(const WaveFunction& psi) const {
  if (!(psi.grid() == grid_)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "state and basis live on different grids");
  }
  const auto v = psi.values();
  std::vector<cplx> c(functions_.size());
  for (std::size_t j = 0; j < functions_.size(); ++j) {
    cplx s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += functions_[j][k] * v[k];
    c[j] = s * grid_.dx();
  }
  return c;
}

WaveFunction HermiteBasis::synthesize(std::span<const cplx> coeffs) const {
  std::vector<cplx> v(grid_.size(), cplx(0.0));
  const std::size_t m = std::min(coeffs.size(), functions_.size());
  for (std::size_t j = 0; j < m; ++j) {
    if (coeffs[j] == cplx(0.0)) continue;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += coeffs[j] * functions_[j][k];
  }
  return WaveFunction(grid_, std::move(v));
}

WaveFunction hermite_propagate(const WaveFunction& psi, const HermiteBasis& basis, double t,
                               double capture_tolerance) {
  auto c = basis.coefficients(psi);
  const double total = psi.norm() * psi.norm();
  if (total == 0.0) return psi;
  const double captured = sum_sq(c) / total;
  if (captured < 1.0 - capture_tolerance) {
    throw Error(ErrorKind::TruncationError, kModule,
                "Hermite basis of order " + std::to_string(basis.size()) + " captures only " +
                    fmt(captured) + " of the state; widen or refine the grid");
  }
  if (t == 0.0) return psi;
  for (std::size_t j = 0; j < c.size(); ++j) c[j] *= phase(-basis.eigenvalue(j) * t);
  return basis.synthesize(c);
}

TimeGrid TimeGrid::span(double t0, double t1, double dt, std::size_t stride) {
  if (!std::isfinite(t0) || !std::isfinite(t1) || !std::isfinite(dt) || dt == 0.0) {
    throw Error(ErrorKind::InvalidArgument, kModule, "time grid needs finite t0, t1 and dt != 0");
  }
  const double span = t1 - t0;
  if (span != 0.0 && (span > 0.0) != (dt > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "dt does not point from t0 towards t1");
  }
  const auto steps = static_cast<std::size_t>(std::llround(std::abs(span / dt)));
  TimeGrid g;
  g.t0 = t0;
  g.steps = steps;
  g.dt = steps > 0 ? span / static_cast<double>(steps) : dt;
  g.stride = std::max<std::size_t>(stride, 1);
  return g;
}

Trajectory split_step_propagate(const MassProfile& m, const FrequencyProfile& omega,
                                const WaveFunction& psi, const TimeGrid& time,
                                const SplitStepOptions& opts) {
  const auto start = Clock::now();
  const Grid& grid = psi.grid();
  const std::size_t n = grid.size();
  const double dt = time.dt;
  FourierTransform ft(n);
  MomentMeter meter(grid);
  const auto k = wavenumbers(n, grid.dx());
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<cplx> v(psi.values().begin(), psi.values().end());
  std::vector<cplx> hat(n), prev, work(n);
  const double norm0 = psi.norm();

  Trajectory traj{{}, psi, {}};
  auto record = [&](double t) {
    const Moments mo = meter.measure(v);
    check_resolution(mo, opts.resolution_tail, t);
    const double mass = m.at(t).value;
    const double w = omega.at(t).value;
    TrajectoryRow row;
    row.t = t;
    row.norm = mo.norm;
    row.x_mean = mo.x;
    row.p_mean = mo.p;
    row.energy = mo.p2 / (2.0 * mass) + 0.5 * mass * w * w * mo.x2;
    if (opts.exact) row.fidelity_vs_exact = fidelity(opts.exact(t), WaveFunction(grid, v));
    traj.rows.push_back(row);
  };

  // H(t) psi, spectrally.
  auto apply_h = [&](std::span<const cplx> in, double t, std::vector<cplx>& out) {
    const double mass = m.at(t).value;
    const double w = omega.at(t).value;
    ft.forward(in, hat);
    for (std::size_t j = 0; j < n; ++j) hat[j] *= 0.5 * k[j] * k[j] / mass * inv_n;
    ft.backward(hat, out);
    for (std::size_t j = 0; j < n; ++j) out[j] += 0.5 * mass * w * w * grid.x(j) * grid.x(j) * in[j];
  };

  const auto samples = residual_sample_steps(time.steps, opts.residual_samples);
  std::size_t next_sample = 0;

  record(time.t0);
  for (std::size_t s = 0; s < time.steps; ++s) {
    const double t = time.time(s);
    const double tm = t + 0.5 * dt;
    const double mass = m.at(tm).value;
    const double w = omega.at(tm).value;
    const bool sample = next_sample < samples.size() && samples[next_sample] == s;
    if (sample) prev = v;

    const double vq = 0.5 * mass * w * w;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = grid.x(j);
      v[j] *= phase(-0.5 * dt * vq * x * x);
    }
    ft.forward(v, hat);
    for (std::size_t j = 0; j < n; ++j) hat[j] *= phase(-dt * 0.5 * k[j] * k[j] / mass) * inv_n;
    ft.backward(hat, v);
    for (std::size_t j = 0; j < n; ++j) {
      const double x = grid.x(j);
      v[j] *= phase(-0.5 * dt * vq * x * x);
    }

    const double drift = std::abs(std::sqrt(sum_sq(v) * grid.dx()) - norm0);
    traj.report.max_norm_drift = std::max(traj.report.max_norm_drift, drift);

    if (sample) {
      ++next_sample;
      std::vector<cplx> mid(n);
      for (std::size_t j = 0; j < n; ++j) mid[j] = 0.5 * (v[j] + prev[j]);
      apply_h(mid, tm, work);
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        r += std::norm(cplx(0.0, 1.0) * (v[j] - prev[j]) / dt - work[j]);
      }
      const double res = std::sqrt(r * grid.dx()) / norm0;
      traj.report.max_residual = std::max(traj.report.max_residual, res);
      if (res > opts.residual_bound) {
        throw Error(ErrorKind::StepFailure, kModule,
                    "Schrodinger residual " + fmt(res) + " exceeds bound at t = " + fmt(tm));
      }
    }
    if (is_row_step(s + 1, time)) record(time.time(s + 1));
  }
  traj.report.steps = time.steps;
  traj.final_state = WaveFunction(grid, std::move(v));
  traj.report.wall_time = seconds_since(start);
  return traj;
}

WaveFunction exact_solvable_propagate(const SolvableFamily& family, const WaveFunction& psi0,
                                      double t, const ExactOptions& opts) {
  const double m_ref = opts.m_ref.value_or(solvable_mass(family, 0.0).value);
  const HermiteBasis basis = HermiteBasis::fitted(psi0.grid(), m_ref, family.Omega0);
  return exact_solvable_propagate(family, psi0, t, basis, opts);
}

WaveFunction exact_solvable_propagate(const SolvableFamily& family, const WaveFunction& psi0,
                                      double t, const HermiteBasis& basis,
                                      const ExactOptions& opts) {
  family.validate();
  const MassProfile m = family.mass_profile();
  const double m_ref = opts.m_ref.value_or(m.at(0.0).value);
  if (std::abs(basis.m0() - m_ref) > 1e-14 * m_ref ||
      std::abs(basis.Omega0() - family.Omega0) > 1e-14 * family.Omega0) {
    throw Error(ErrorKind::InvalidArgument, kModule,
                "Hermite basis does not match the reduced oscillator (m_ref, Omega0)");
  }
  // The reduced frequency must be real along the way.
  effective_frequency(m, family.frequency_profile(), t);

  const EpsilonProfile eps{m, m_ref};
  const Derivatives e0 = eps.at(0.0);
  const Derivatives et = eps.at(t);
  const GeneratorSpec dil = GeneratorSpec::linear();

  WaveFunction w = apply_point_unitary(dil, e0.value, psi0, opts.unitary);
  w = apply_quadratic_phase(m_ref * e0.first, w);
  w = hermite_propagate(w, basis, t, opts.capture_tolerance);
  w = apply_quadratic_phase(-m_ref * et.first, w);
  return apply_point_unitary(dil, -et.value, w, opts.unitary);
}

GaussianState gaussian_oscillator_evolve(const GaussianState& g, double M, double Omega,
                                         double t) {
  g.validate();
  if (t == 0.0) return g;
  const double c = std::cos(Omega * t);
  const double s = std::sin(Omega * t);
  const cplx B = g.width / (M * Omega);
  const cplx z = c + cplx(0.0, 1.0) * B * s;
  const cplx A = M * Omega * (B * c + cplx(0.0, 1.0) * s) / z;
  const double q = g.center * c + g.momentum / (M * Omega) * s;
  const double p = g.momentum * c - M * Omega * g.center * s;
  double arg = std::atan2(z.imag(), z.real());
  const double wt = Omega * t;
  arg += 2.0 * std::numbers::pi * std::round((wt - arg) / (2.0 * std::numbers::pi));
  const double theta = g.phase + 0.5 * (p * q - g.momentum * g.center) - 0.5 * arg;
  return {A, q, p, theta};
}

GaussianState gaussian_exact_propagate(const SolvableFamily& family, const GaussianState& g0,
                                       double t, std::optional<double> m_ref_opt) {
  family.validate();
  const MassProfile m = family.mass_profile();
  const double m_ref = m_ref_opt.value_or(m.at(0.0).value);
  const EpsilonProfile eps{m, m_ref};
  const Derivatives e0 = eps.at(0.0);
  const Derivatives et = eps.at(t);
  GaussianState g = g0.dilated(e0.value).chirped(m_ref * e0.first);
  g = gaussian_oscillator_evolve(g, m_ref, family.Omega0, t);
  return g.chirped(-m_ref * et.first).dilated(-et.value);
}

namespace {

Trajectory crank_nicolson_impl(const std::function<BandedMatrix(double)>& hamiltonian,
                               bool time_dependent, const WaveFunction& psi,
                               const TimeGrid& time, const CrankNicolsonOptions& opts) {
  const auto start = Clock::now();
  const Grid& grid = psi.grid();
  const std::size_t n = grid.size();
  const double dt = time.dt;
  MomentMeter meter(grid);

  std::vector<cplx> v(psi.values().begin(), psi.values().end());
  const double norm0 = psi.norm();
  const cplx half_step(0.0, 0.5 * dt);

  std::optional<BandedMatrix> h;
  std::optional<BandedMatrix> explicit_part;
  std::optional<BandedLU> lu;
  auto assemble = [&](double t) {
    h.emplace(hamiltonian(t));
    explicit_part.emplace(h->identity_plus(-half_step));
    lu.emplace(h->identity_plus(half_step));
  };

  Trajectory traj{{}, psi, {}};
  auto record = [&](double t, const BandedMatrix& ham) {
    const Moments mo = meter.measure(v);
    TrajectoryRow row;
    row.t = t;
    row.norm = mo.norm;
    row.x_mean = mo.x;
    row.p_mean = mo.p;
    const auto hv = ham.apply(v);
    cplx e = 0.0;
    for (std::size_t j = 0; j < n; ++j) e += std::conj(v[j]) * hv[j];
    const double s = sum_sq(v);
    row.energy = s > 0.0 ? e.real() / s : 0.0;
    if (opts.exact) row.fidelity_vs_exact = fidelity(opts.exact(t), WaveFunction(grid, v));
    traj.rows.push_back(row);
  };

  assemble(time.t0 + 0.5 * dt);
  record(time.t0, time_dependent ? hamiltonian(time.t0) : *h);
  const auto samples = residual_sample_steps(time.steps, 16);
  std::size_t next_sample = 0;
  std::vector<cplx> prev;
  for (std::size_t s = 0; s < time.steps; ++s) {
    const double tm = time.time(s) + 0.5 * dt;
    if (time_dependent && s > 0) assemble(tm);
    const bool sample = next_sample < samples.size() && samples[next_sample] == s;
    if (sample) prev = v;
    const auto rhs = explicit_part->apply(v);
    v = lu->solve(rhs);
    const double drift = std::abs(std::sqrt(sum_sq(v) * grid.dx()) - norm0);
    traj.report.max_norm_drift = std::max(traj.report.max_norm_drift, drift);
    if (sample) {
      ++next_sample;
      std::vector<cplx> mid(n);
      for (std::size_t j = 0; j < n; ++j) mid[j] = 0.5 * (v[j] + prev[j]);
      const auto hm = h->apply(mid);
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        r += std::norm(cplx(0.0, 1.0) * (v[j] - prev[j]) / dt - hm[j]);
      }
      traj.report.max_residual =
          std::max(traj.report.max_residual, std::sqrt(r * grid.dx()) / norm0);
    }
    if (is_row_step(s + 1, time)) {
      const double t1 = time.time(s + 1);
      record(t1, time_dependent ? hamiltonian(t1) : *h);
    }
  }
  traj.report.steps = time.steps;
  traj.final_state = WaveFunction(grid, std::move(v));
  traj.report.wall_time = seconds_since(start);
  return traj;
}

}  // namespace

Trajectory crank_nicolson_curved(const MetricProfile& g, double mass, const WaveFunction& psi,
                                 const TimeGrid& time, const CrankNicolsonOptions& opts) {
  const BandedMatrix h = curved_hamiltonian_matrix(g, mass, psi.grid(), opts.order);
  return crank_nicolson_impl([&h](double) { return h; }, false, psi, time, opts);
}

Trajectory crank_nicolson_curved(const std::function<MetricProfile(double)>& g, double mass,
                                 const WaveFunction& psi, const TimeGrid& time,
                                 const CrankNicolsonOptions& opts) {
  const Grid grid = psi.grid();
  return crank_nicolson_impl(
      [&](double t) { return curved_hamiltonian_matrix(g(t), mass, grid, opts.order); }, true,
      psi, time, opts);
}

double richardson_ratio(const std::function<WaveFunction(double dt)>& run, double dt) {
  const WaveFunction a = run(dt);
  const WaveFunction b = run(0.5 * dt);
  const WaveFunction c = run(0.25 * dt);
  const double num = relative_distance(a.values(), b.values());
  const double den = relative_distance(b.values(), c.values());
  if (den == 0.0) {
    throw Error(ErrorKind::DivisionByZero, kModule, "Richardson ratio: runs at dt/2 and dt/4 agree exactly");
  }
  return num / den;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,norm,fidelity_vs_exact,x_mean,p_mean,energy\n";
  for (const auto& r : traj.rows) {
    os << format_double(r.t) << ',' << format_double(r.norm) << ','
       << format_double(r.fidelity_vs_exact) << ',' << format_double(r.x_mean) << ','
       << format_double(r.p_mean) << ',' << format_double(r.energy) << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, kModule, "cannot write " + path);
  write_trajectory_csv(os, traj);
}

}  // namespace canonflow
