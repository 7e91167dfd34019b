#include "canonflow/gridspace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "canonflow/error.hpp"

namespace canonflow {
namespace {

constexpr const char* kModule = "gridspace";

double sum_sq(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

std::vector<cplx> spectral_resample(const WaveFunction& psi, std::span<const double> points) {
  const std::size_t n = psi.size();
  const Grid& grid = psi.grid();
  FourierTransform ft(n);
  std::vector<cplx> hat(n);
  ft.forward(psi.values(), hat);
  for (auto& h : hat) h /= static_cast<double>(n);

  const std::size_t half = (n - 1) / 2;  // highest non-Nyquist index
  const bool has_nyquist = n % 2 == 0;
  const double length = grid.length();
  std::vector<cplx> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double y = points[i];
    const double s = y - grid.x0();
    if (!(s >= 0.0 && s < length)) {
      out[i] = 0.0;
      continue;
    }
    const double theta = 2.0 * std::numbers::pi * s / length;
    const cplx w(std::cos(theta), std::sin(theta));
    const cplx wc = std::conj(w);
    // Horner for sum_{j=0}^{half} hat_j w^j and sum_{j=1}^{half} hat_{n-j} w^{-j}.
    cplx pos = 0.0;
    for (std::size_t j = half + 1; j-- > 0;) pos = pos * w + hat[j];
    cplx neg = 0.0;
    for (std::size_t j = half; j >= 1; --j) neg = neg * wc + hat[n - j];
    neg *= wc;
    cplx v = pos + neg;
    if (has_nyquist) v += hat[n / 2] * std::cos(0.5 * static_cast<double>(n) * theta);
    out[i] = v;
  }
  return out;
}

// Natural cubic spline second derivatives for uniformly spaced samples.
std::vector<double> spline_moments(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  std::vector<double> c(n, 0.0), d(n, 0.0);
  // Tridiagonal system for interior moments: m_{k-1} + 4 m_k + m_{k+1} = 6 (y_{k+1} - 2y_k + y_{k-1}) / h^2.
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double rhs = 6.0 * (y[k + 1] - 2.0 * y[k] + y[k - 1]) / (h * h);
    const double denom = 4.0 - (k > 1 ? c[k - 1] : 0.0);
    c[k] = 1.0 / denom;
    d[k] = (rhs - (k > 1 ? d[k - 1] : 0.0)) / denom;
  }
  for (std::size_t k = n - 2; k >= 1; --k) {
    m[k] = d[k] - c[k] * m[k + 1];
  }
  return m;
}

std::vector<cplx> spline_resample(const WaveFunction& psi, std::span<const double> points) {
  const std::size_t n = psi.size();
  const Grid& grid = psi.grid();
  std::vector<double> re(n), im(n);
  for (std::size_t k = 0; k < n; ++k) {
    re[k] = psi[k].real();
    im[k] = psi[k].imag();
  }
  const double h = grid.dx();
  const auto mr = spline_moments(re, h);
  const auto mi = spline_moments(im, h);
  auto eval = [&](const std::vector<double>& y, const std::vector<double>& m, std::size_t k,
                  double t) {
    const double a = 1.0 - t, b = t;
    return a * y[k] + b * y[k + 1] +
           ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0;
  };
  std::vector<cplx> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double s = (points[i] - grid.x0()) / h;
    if (!(s >= 0.0 && s <= static_cast<double>(n - 1))) {
      out[i] = 0.0;
      continue;
    }
    std::size_t k = std::min(static_cast<std::size_t>(s), n - 2);
    const double t = s - static_cast<double>(k);
    out[i] = {eval(re, mr, k, t), eval(im, mi, k, t)};
  }
  return out;
}

void check_norm_preserved(const WaveFunction& in, const WaveFunction& out, double tol,
                          const char* what) {
  const double a = in.norm();
  const double b = out.norm();
  if (a == 0.0) return;
  if (std::abs(b - a) > tol * a) {
    std::ostringstream os;
    os.precision(6);
    os << what << ": transformed support leaves the grid (norm " << a << " -> " << b << ")";
    throw Error(ErrorKind::SupportLeakage, kModule, os.str());
  }
}

void check_edges(const WaveFunction& psi, const PointUnitaryOptions& opts) {
  if (!satisfies_edge_decay(psi, opts.edge_threshold, opts.edge_fraction)) {
    throw Error(ErrorKind::SupportLeakage, kModule,
                "state does not decay at the grid edges; refusing to resample");
  }
}

}  // namespace

Grid::Grid(double x0, double dx, std::size_t n) : x0_(x0), dx_(dx), n_(n) {
  if (!(dx > 0.0) || !std::isfinite(dx) || !std::isfinite(x0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "grid needs finite x0 and dx > 0");
  }
  if (n < 8) throw Error(ErrorKind::InvalidArgument, kModule, "grid needs at least 8 points");
}

Grid Grid::over(double lo, double hi, std::size_t n) {
  if (!(hi > lo)) throw Error(ErrorKind::InvalidArgument, kModule, "empty grid interval");
  return Grid(lo, (hi - lo) / static_cast<double>(n), n);
}

std::vector<double> Grid::points() const {
  std::vector<double> xs(n_);
  for (std::size_t k = 0; k < n_; ++k) xs[k] = x(k);
  return xs;
}

WaveFunction::WaveFunction(Grid grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw Error(ErrorKind::InvalidArgument, kModule, "value count does not match grid");
  }
}

double WaveFunction::norm() const { return std::sqrt(grid_.dx() * sum_sq(values_)); }

WaveFunction WaveFunction::normalized() const {
  const double nrm = norm();
  if (!(nrm > 0.0)) throw Error(ErrorKind::NotNormalized, kModule, "cannot normalize zero state");
  std::vector<cplx> v(values_);
  for (auto& z : v) z /= nrm;
  return WaveFunction(grid_, std::move(v));
}

void GaussianState::validate() const {
  if (!(width.real() > 0.0) || !std::isfinite(width.imag()) || !std::isfinite(center) ||
      !std::isfinite(momentum) || !std::isfinite(phase)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "Gaussian needs Re A > 0 and finite parameters");
  }
}

cplx GaussianState::operator()(double x) const {
  const double y = x - center;
  const double norm = std::pow(width.real() / std::numbers::pi, 0.25);
  return norm * std::exp(-0.5 * width * y * y + cplx(0.0, momentum * y + phase));
}

WaveFunction GaussianState::rasterize(const Grid& grid) const {
  validate();
  std::vector<cplx> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) v[k] = (*this)(grid.x(k));
  return WaveFunction(grid, std::move(v));
}

GaussianState GaussianState::dilated(double eps) const {
  return {width * std::exp(2.0 * eps), center * std::exp(-eps), momentum * std::exp(eps), phase};
}

GaussianState GaussianState::chirped(double chi) const {
  return {width + cplx(0.0, chi), center, momentum - chi * center,
          phase - 0.5 * chi * center * center};
}

cplx inner_product(const WaveFunction& a, const WaveFunction& b) {
  if (!(a.grid() == b.grid())) {
    throw Error(ErrorKind::InvalidArgument, kModule, "inner product of states on different grids");
  }
  cplx s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
  return s * a.grid().dx();
}

double fidelity(const WaveFunction& a, const WaveFunction& b) {
  return std::abs(inner_product(a, b)) / (a.norm() * b.norm());
}

double phase_aligned_distance(const WaveFunction& a, const WaveFunction& b) {
  const cplx ov = inner_product(b, a);
  const cplx rot = std::abs(ov) > 0.0 ? ov / std::abs(ov) : cplx(1.0);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::norm(a[k] - rot * b[k]);
  return std::sqrt(s * a.grid().dx());
}

std::vector<cplx> resample(const WaveFunction& psi, std::span<const double> points,
                           Interpolant interpolant) {
  return interpolant == Interpolant::Spectral ? spectral_resample(psi, points)
                                              : spline_resample(psi, points);
}

bool satisfies_edge_decay(const WaveFunction& psi, double threshold, double fraction) {
  const auto v = psi.values();
  double peak = 0.0;
  for (const auto& z : v) peak = std::max(peak, std::abs(z));
  if (peak == 0.0) return true;
  const auto edge = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * v.size()));
  for (std::size_t k = 0; k < edge; ++k) {
    if (std::abs(v[k]) > threshold * peak || std::abs(v[v.size() - 1 - k]) > threshold * peak) {
      return false;
    }
  }
  return true;
}

WaveFunction apply_point_unitary(const GeneratorSpec& f, double eps, const WaveFunction& psi,
                                 const PointUnitaryOptions& opts) {
  if (eps == 0.0) return psi;
  check_edges(psi, opts);
  const Grid& grid = psi.grid();
  std::vector<double> targets(grid.size());
  std::vector<double> weights(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto ev = evaluate_flow(f, eps, grid.x(k), opts.flow);
    targets[k] = ev.x_out;
    weights[k] = std::sqrt(ev.jacobian);
  }
  auto vals = resample(psi, targets, opts.interpolant);
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] *= weights[k];
  WaveFunction out(grid, std::move(vals));
  check_norm_preserved(psi, out, opts.leak_tolerance, "point unitary");
  return out;
}

WaveFunction apply_point_unitary_adjoint(const GeneratorSpec& f, double eps,
                                         const WaveFunction& psi,
                                         const PointUnitaryOptions& opts) {
  if (eps == 0.0) return psi;
  check_edges(psi, opts);
  const Grid& grid = psi.grid();
  std::vector<double> targets(grid.size());
  std::vector<double> weights(grid.size());
  const double outside = grid.x0() - 2.0 * grid.length();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto ev = try_evaluate_flow(f, -eps, grid.x(k), opts.flow);
    // Points without a preimage lie outside the range of phi_eps.
    targets[k] = ev.domain_ok ? ev.x_out : outside;
    weights[k] = ev.domain_ok ? std::sqrt(ev.jacobian) : 0.0;
  }
  auto vals = resample(psi, targets, opts.interpolant);
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] *= weights[k];
  WaveFunction out(grid, std::move(vals));
  check_norm_preserved(psi, out, opts.leak_tolerance, "adjoint point unitary");
  return out;
}

WaveFunction apply_quadratic_phase(double chi, const WaveFunction& psi) {
  if (chi == 0.0) return psi;
  const Grid& grid = psi.grid();
  std::vector<cplx> v(psi.values().begin(), psi.values().end());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double x = grid.x(k);
    const double arg = -0.5 * chi * x * x;
    v[k] *= cplx(std::cos(arg), std::sin(arg));
  }
  return WaveFunction(grid, std::move(v));
}

std::vector<cplx> apply_momentum(std::span<const cplx> values, double dx) {
  auto d = spectral_derivative(values, dx, 1);
  for (auto& z : d) z *= cplx(0.0, -1.0);
  return d;
}

Expectation expectation(const Observable& obs, const WaveFunction& psi, double norm_tolerance) {
  const double nrm = psi.norm();
  if (std::abs(nrm - 1.0) > norm_tolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "expectation needs a normalized state (norm = " << nrm << ")";
    throw Error(ErrorKind::NotNormalized, kModule, os.str());
  }
  const Grid& grid = psi.grid();
  const auto v = psi.values();
  const double dx = grid.dx();
  auto braket = [&](std::span<const cplx> w) {
    cplx s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += std::conj(v[k]) * w[k];
    return s * dx;
  };
  std::vector<cplx> w(v.size());
  auto times_x = [&](std::span<const cplx> in, int power) {
    std::vector<cplx> out(in.begin(), in.end());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::pow(grid.x(k), power);
    return out;
  };
  auto anticomm = [&]() {
    auto xpsi = times_x(v, 1);
    auto p_of_x = apply_momentum(xpsi, dx);
    auto x_of_p = times_x(apply_momentum(v, dx), 1);
    std::vector<cplx> out(v.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = p_of_x[k] + x_of_p[k];
    return out;
  };
  auto p2 = [&]() {
    auto d2 = spectral_derivative(v, dx, 2);
    for (auto& z : d2) z = -z;
    return d2;
  };

  cplx r;
  switch (obs.kind) {
    case Observable::Kind::X: r = braket(times_x(v, 1)); break;
    case Observable::Kind::X2: r = braket(times_x(v, 2)); break;
    case Observable::Kind::P: r = braket(apply_momentum(v, dx)); break;
    case Observable::Kind::P2: r = braket(p2()); break;
    case Observable::Kind::AnticommXP: r = braket(anticomm()); break;
    case Observable::Kind::Quadratic:
      r = obs.a * braket(p2()) + obs.b * braket(times_x(v, 2)) + 0.5 * obs.c * braket(anticomm());
      break;
  }
  return {r.real(), std::abs(r.imag())};
}

BracketReport verify_bracket_identities(const GeneratorSpec& f1, const GeneratorSpec& f2,
                                        const Grid& grid,
                                        std::span<const WaveFunction> probes) {
  const std::size_t n = grid.size();
  const double dx = grid.dx();
  const auto h = bracket_f3(f1, f2);
  std::vector<double> v1(n), v2(n), d2(n), vh(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = grid.x(k);
    v1[k] = f1.value(x);
    v2[k] = f2.value(x);
    d2[k] = f2.derivative(x);
    vh[k] = h(x);
  }
  // {g, p} psi = g (p psi) + p (g psi)
  auto anti = [&](const std::vector<double>& g, std::span<const cplx> psi) {
    std::vector<cplx> gpsi(n);
    for (std::size_t k = 0; k < n; ++k) gpsi[k] = g[k] * psi[k];
    auto a = apply_momentum(psi, dx);
    auto b = apply_momentum(gpsi, dx);
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = g[k] * a[k] + b[k];
    return out;
  };
  auto l2 = [&](std::span<const cplx> a) { return std::sqrt(dx * sum_sq(a)); };

  BracketReport report;
  for (const auto& probe : probes) {
    if (!(probe.grid() == grid)) {
      throw Error(ErrorKind::InvalidArgument, kModule, "probe lives on a different grid");
    }
    const auto psi = probe.values();
    const double nrm = l2(psi);

    std::vector<cplx> f2psi(n);
    for (std::size_t k = 0; k < n; ++k) f2psi[k] = v2[k] * psi[k];
    const auto a_f2psi = anti(v1, f2psi);
    const auto a_psi = anti(v1, psi);
    std::vector<cplx> r1(n);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx lhs = a_f2psi[k] - v2[k] * a_psi[k];
      const cplx rhs = cplx(0.0, -2.0) * v1[k] * d2[k] * psi[k];
      r1[k] = lhs - rhs;
    }
    report.first_residual = std::max(report.first_residual, l2(r1) / nrm);

    const auto a2_psi = anti(v2, psi);
    const auto a1a2 = anti(v1, a2_psi);
    const auto a2a1 = anti(v2, a_psi);
    const auto h_anti = anti(vh, psi);
    std::vector<cplx> r2(n);
    for (std::size_t k = 0; k < n; ++k) {
      r2[k] = (a1a2[k] - a2a1[k]) - cplx(0.0, -1.0) * h_anti[k];
    }
    report.second_residual = std::max(report.second_residual, l2(r2) / nrm);
  }
  return report;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void write_wavefunction_csv(std::ostream& os, const WaveFunction& psi) {
  os << "x,re,im\n";
  for (std::size_t k = 0; k < psi.size(); ++k) {
    os << format_double(psi.grid().x(k)) << ',' << format_double(psi[k].real()) << ','
       << format_double(psi[k].imag()) << '\n';
  }
}

void write_wavefunction_csv(const std::string& path, const WaveFunction& psi) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, kModule, "cannot write " + path);
  write_wavefunction_csv(os, psi);
}

WaveFunction read_wavefunction_csv(std::istream& is) {
  std::string line;
  std::vector<double> xs;
  std::vector<cplx> vals;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos) {
      if (line != "x,re,im") {
        throw Error(ErrorKind::IoError, kModule, "unexpected wavefunction CSV header: " + line);
      }
      continue;
    }
    std::array<double, 3> cols{};
    std::size_t start = 0;
    for (int c = 0; c < 3; ++c) {
      const std::size_t end = c < 2 ? line.find(',', start) : line.size();
      if (end == std::string::npos) {
        throw Error(ErrorKind::IoError, kModule, "line " + std::to_string(lineno) + ": expected 3 columns");
      }
      const std::string cell = line.substr(start, end - start);
      const char* first = cell.data();
      while (*first == ' ') ++first;
      auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), cols[c]);
      if (ec != std::errc{}) {
        throw Error(ErrorKind::IoError, kModule, "line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      (void)ptr;
      start = end + 1;
    }
    xs.push_back(cols[0]);
    vals.emplace_back(cols[1], cols[2]);
  }
  if (xs.size() < 8) throw Error(ErrorKind::IoError, kModule, "wavefunction CSV needs at least 8 rows");
  const double dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double expect = xs.front() + static_cast<double>(k) * dx;
    if (std::abs(xs[k] - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
      throw Error(ErrorKind::IoError, kModule, "wavefunction CSV grid is not uniform");
    }
  }
  return WaveFunction(Grid(xs.front(), dx, xs.size()), std::move(vals));
}

WaveFunction read_wavefunction_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, kModule, "cannot read " + path);
  return read_wavefunction_csv(is);
}

}  // namespace canonflow
