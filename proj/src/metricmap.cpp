#include "canonflow/metricmap.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>

#include "canonflow/error.hpp"
#include "canonflow/propagators.hpp"

namespace canonflow {
namespace {

constexpr const char* kModule = "metricmap";

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double five_point_derivative(const std::function<double(double)>& fn, double x) {
  const double h = 1e-4 * std::max(1.0, std::abs(x));
  return (-fn(x + 2 * h) + 8.0 * fn(x + h) - 8.0 * fn(x - h) + fn(x - 2 * h)) / (12.0 * h);
}

// Natural cubic spline on strictly increasing abscissae.
struct Spline {
  std::vector<double> x, y, m;  // m = second derivatives

  Spline(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
    const std::size_t n = x.size();
    m.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x[i] - x[i - 1];
      const double h1 = x[i + 1] - x[i];
      const double diag = 2.0 * (h0 + h1);
      const double rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
      const double denom = diag - h0 * c[i - 1];
      c[i] = h1 / denom;
      d[i] = (rhs - h0 * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 1;) m[i] = d[i] - c[i] * m[i + 1];
  }

  std::size_t cell(double t) const {
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    return std::min(i, x.size() - 2);
  }

  double value(double t) const {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    const std::size_t i = cell(t);
    const double h = x[i + 1] - x[i];
    const double a = (x[i + 1] - t) / h;
    const double b = (t - x[i]) / h;
    return a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
  }

  double derivative(double t) const {
    if (t <= x.front() || t >= x.back()) return 0.0;
    const std::size_t i = cell(t);
    const double h = x[i + 1] - x[i];
    const double a = (x[i + 1] - t) / h;
    const double b = (t - x[i]) / h;
    return (y[i + 1] - y[i]) / h + ((1.0 - 3.0 * a * a) * m[i] + (3.0 * b * b - 1.0) * m[i + 1]) * h / 6.0;
  }
};

// Cubic Hermite table of a monotone map on a uniform grid.
struct FlowTable {
  double lo, h;
  std::vector<double> y, dy;

  double value(double x) const {
    const double s = (x - lo) / h;
    auto i = static_cast<std::ptrdiff_t>(std::floor(s));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(y.size()) - 2);
    const auto k = static_cast<std::size_t>(i);
    const double t = s - static_cast<double>(i);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y[k] + (t3 - 2 * t2 + t) * h * dy[k] +
           (-2 * t3 + 3 * t2) * y[k + 1] + (t3 - t2) * h * dy[k + 1];
  }

  double slope(double x) const {
    const double s = (x - lo) / h;
    auto i = static_cast<std::ptrdiff_t>(std::floor(s));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(y.size()) - 2);
    const auto k = static_cast<std::size_t>(i);
    const double t = s - static_cast<double>(i);
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * y[k] + (6 * t - 6 * t2) * y[k + 1]) / h +
           (3 * t2 - 4 * t + 1) * dy[k] + (3 * t2 - 2 * t) * dy[k + 1];
  }

  double hi() const { return lo + h * static_cast<double>(y.size() - 1); }

  double inverse(double v) const {
    if (!(v >= y.front() - 1e-12 && v <= y.back() + 1e-12)) {
      throw Error(ErrorKind::InvalidArgument, kModule,
                  "inverse flow evaluated outside the tabulated range at " + fmt(v));
    }
    const auto it = std::upper_bound(y.begin(), y.end(), v);
    std::size_t i = it == y.begin() ? 0 : static_cast<std::size_t>(it - y.begin()) - 1;
    i = std::min(i, y.size() - 2);
    const double x0 = lo + h * static_cast<double>(i);
    double x = x0 + h * (v - y[i]) / (y[i + 1] - y[i]);
    for (int it_n = 0; it_n < 50; ++it_n) {
      const double r = value(x) - v;
      const double dx = r / slope(x);
      x -= dx;
      if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
  }
};

constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665,
                                                 0.5688888888888889, 0.4786286704993665,
                                                 0.2369268850561891};

double gauss_integral(const std::function<double(double)>& fn, double a, double b) {
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t j = 0; j < 5; ++j) s += kGaussWeights[j] * fn(c + r * kGaussNodes[j]);
  return s * r;
}

struct QuinticSeed {
  double left, width;
  std::array<double, 6> c;

  QuinticSeed(double L, double R, std::array<double, 3> at_l, std::array<double, 3> at_r)
      : left(L), width(R - L) {
    const double h = width;
    c[0] = at_l[0];
    c[1] = h * at_l[1];
    c[2] = 0.5 * h * h * at_l[2];
    const double A = at_r[0] - c[0] - c[1] - c[2];
    const double B = h * at_r[1] - c[1] - 2.0 * c[2];
    const double C = h * h * at_r[2] - 2.0 * c[2];
    c[3] = 10.0 * A - 4.0 * B + 0.5 * C;
    c[4] = -15.0 * A + 7.0 * B - C;
    c[5] = 6.0 * A - 3.0 * B + 0.5 * C;
  }

  double first(double x) const {
    const double t = (x - left) / width;
    return (c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])))) / width;
  }
  double second(double x) const {
    const double t = (x - left) / width;
    return (2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]))) / (width * width);
  }
};

struct AbelGenerator {
  FlowTable table;
  MetricProfile g;
  QuinticSeed seed;
  double L, R;
  bool forward;  // phi(x) > x
  std::size_t max_iterations;

  double dphi(double x) const { return std::sqrt(g(x)); }
  double ddphi(double x) const { return 0.5 * g.derivative(x) / std::sqrt(g(x)); }

  // f and f' at x from the seed through f(phi(w)) = phi'(w) f(w).
  std::pair<double, double> evaluate(double x) const {
    struct Step {
      double at;
      bool applied_phi;
    };
    std::vector<Step> path;
    double w = x;
    std::size_t count = 0;
    auto guard = [&] {
      if (++count > max_iterations) {
        throw Error(ErrorKind::FixedPointInInterval, kModule,
                    "orbit of " + fmt(x) + " does not reach the fundamental domain");
      }
    };
    while (w >= R) {
      guard();
      if (forward) {
        path.push_back({w, false});
        w = table.inverse(w);
      } else {
        path.push_back({w, true});
        w = table.value(w);
      }
    }
    while (w < L) {
      guard();
      if (forward) {
        path.push_back({w, true});
        w = table.value(w);
      } else {
        path.push_back({w, false});
        w = table.inverse(w);
      }
    }
    const double u1 = seed.first(w);
    double f = 1.0 / u1;
    double df = -seed.second(w) / (u1 * u1);
    double cur = w;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      if (it->applied_phi) {
        // cur = phi(p); recover f(p).
        const double p = it->at;
        const double d1 = dphi(p);
        const double fp = f / d1;
        df = df - ddphi(p) * fp / d1;
        f = fp;
      } else {
        // cur = phi^{-1}(p); step forward to p = phi(cur).
        const double d1 = dphi(cur);
        df = df + ddphi(cur) * f / d1;
        f = d1 * f;
      }
      cur = it->at;
    }
    return {f, df};
  }
};

}  // namespace

MetricProfile MetricProfile::from_function(std::function<double(double)> g,
                                           std::function<double(double)> dg, std::string label) {
  if (!g) throw Error(ErrorKind::InvalidArgument, kModule, "empty metric function");
  return MetricProfile(std::move(g), std::move(dg), std::move(label));
}

MetricProfile MetricProfile::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::SingularMetric, kModule, "constant metric needs 0 < g < inf");
  }
  return MetricProfile([value](double) { return value; }, [](double) { return 0.0; },
                       "constant " + fmt(value));
}

MetricProfile MetricProfile::from_table(std::vector<double> x, std::vector<double> g) {
  if (x.size() != g.size() || x.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, kModule, "metric table needs >= 2 matching (x, g) rows");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(g[i])) {
      throw Error(ErrorKind::InvalidArgument, kModule, "metric table has non-finite entries");
    }
    if (!(g[i] > 0.0)) {
      throw Error(ErrorKind::SingularMetric, kModule, "metric table has g <= 0 at x = " + fmt(x[i]));
    }
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, kModule, "metric table x must be strictly increasing");
    }
  }
  auto spline = std::make_shared<Spline>(std::move(x), std::move(g));
  return MetricProfile([spline](double t) { return spline->value(t); },
                       [spline](double t) { return spline->derivative(t); }, "table");
}

MetricProfile MetricProfile::from_csv(std::istream& is) {
  std::vector<double> xs, gs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos) {
      if (line != "x,g") throw Error(ErrorKind::IoError, kModule, "unexpected metric CSV header: " + line);
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorKind::IoError, kModule, "line " + std::to_string(lineno) + ": expected x,g");
    }
    double vals[2];
    const std::string cells[2] = {line.substr(0, comma), line.substr(comma + 1)};
    for (int c = 0; c < 2; ++c) {
      const char* first = cells[c].data();
      const char* last = first + cells[c].size();
      while (first < last && *first == ' ') ++first;
      auto [ptr, ec] = std::from_chars(first, last, vals[c]);
      if (ec != std::errc{}) {
        throw Error(ErrorKind::IoError, kModule,
                    "line " + std::to_string(lineno) + ": bad number '" + cells[c] + "'");
      }
      (void)ptr;
    }
    xs.push_back(vals[0]);
    gs.push_back(vals[1]);
  }
  return from_table(std::move(xs), std::move(gs));
}

MetricProfile MetricProfile::from_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, kModule, "cannot read " + path);
  return from_csv(is);
}

double MetricProfile::operator()(double x) const {
  const double v = g_(x);
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::SingularMetric, kModule,
                "metric is not positive and finite at x = " + fmt(x) + " (g = " + fmt(v) + ")");
  }
  return v;
}

double MetricProfile::derivative(double x) const {
  if (dg_) return dg_(x);
  return five_point_derivative([this](double t) { return (*this)(t); }, x);
}

MetricProfile metric_from_generator(const GeneratorSpec& f, double eps, const FlowOptions& opts) {
  return MetricProfile::from_function(
      [f, eps, opts](double x) {
        const double f2 = conjugation_factor(f, eps, x, opts);
        return 1.0 / (f2 * f2);
      },
      {}, "metric of " + f.name());
}

BandedMatrix curved_hamiltonian_matrix(const MetricProfile& g, double mass, const Grid& grid,
                                       int order) {
  if (!(mass > 0.0)) throw Error(ErrorKind::InvalidArgument, kModule, "mass must be positive");
  const std::size_t n = grid.size();
  std::vector<double> outer(n), inner(n + 1);
  for (std::size_t k = 0; k < n; ++k) outer[k] = std::pow(g(grid.x(k)), -0.25);
  for (std::size_t r = 0; r <= n; ++r) {
    inner[r] = 1.0 / std::sqrt(g(grid.x0() + (static_cast<double>(r) - 0.5) * grid.dx()));
  }
  return kinetic_sandwich(grid.dx(), outer, inner, mass, order);
}

InverseResult generator_from_metric(const MetricProfile& g, double eps, double anchor, double lo,
                                    double hi, const InverseOptions& opts) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "working interval must satisfy lo < hi");
  }
  if (!(anchor >= lo && anchor < hi)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "anchor must lie in the working interval");
  }
  if (eps == 0.0 || !std::isfinite(eps)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "inverse problem needs a finite eps != 0");
  }
  const std::size_t n = std::max<std::size_t>(opts.table_points, 16);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  const auto root_g = [&g](double x) { return std::sqrt(g(x)); };

  FlowTable table{lo, h, std::vector<double>(n), std::vector<double>(n)};
  double acc = 0.0;
  table.y[0] = 0.0;
  table.dy[0] = root_g(lo);
  for (std::size_t j = 1; j < n; ++j) {
    const double a = lo + h * static_cast<double>(j - 1);
    acc += gauss_integral(root_g, a, a + h);
    table.y[j] = acc;
    table.dy[j] = root_g(a + h);
  }
  const auto cell = std::min<std::size_t>(static_cast<std::size_t>((anchor - lo) / h), n - 2);
  const double a_cell = lo + h * static_cast<double>(cell);
  const double at_anchor = table.y[cell] + gauss_integral(root_g, a_cell, anchor);
  const double image = opts.anchor_image.value_or(anchor + eps);
  for (auto& v : table.y) v += image - at_anchor;

  // A fundamental domain needs phi(x) - x of one strict sign.
  double min_gap = std::numeric_limits<double>::infinity();
  int sign = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double gap = table.y[j] - (lo + h * static_cast<double>(j));
    const int s = gap > 0.0 ? 1 : (gap < 0.0 ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign)) {
      throw Error(ErrorKind::FixedPointInInterval, kModule,
                  "phi has a fixed point near x = " + fmt(lo + h * static_cast<double>(j)));
    }
    sign = s;
    min_gap = std::min(min_gap, std::abs(gap));
  }
  const bool forward = sign > 0;
  const double b = image;
  if (!(b >= lo && b <= hi)) {
    throw Error(ErrorKind::InvalidArgument, kModule,
                "phi(anchor) = " + fmt(b) + " leaves the working interval");
  }

  const double d1 = root_g(anchor);
  const double d2 = 0.5 * g.derivative(anchor) / d1;
  const double da = eps / (b - anchor) * std::sqrt(d1);
  const double db = da / d1;
  const double sa = (db - da) / (b - anchor);
  const double sb = (sa * d1 - da * d2) / (d1 * d1 * d1);
  const std::array<double, 3> at_a{0.0, da, sa};
  const std::array<double, 3> at_b{eps, db, sb};
  const double L = forward ? anchor : b;
  const double R = forward ? b : anchor;
  QuinticSeed seed = forward ? QuinticSeed(L, R, at_a, at_b) : QuinticSeed(L, R, at_b, at_a);

  const double expected_sign = eps / (b - anchor);
  for (int j = 0; j <= 400; ++j) {
    const double x = L + (R - L) * j / 400.0;
    if (!(seed.first(x) * expected_sign > 0.0)) {
      throw Error(ErrorKind::NonMonotoneFlow, kModule,
                  "Abel seed is not monotone on the fundamental domain near x = " + fmt(x));
    }
  }

  auto abel = std::make_shared<AbelGenerator>(
      AbelGenerator{table, g, seed, L, R, forward, opts.max_iterations});
  auto f = [abel](double x) { return abel->evaluate(x).first; };
  auto df = [abel](double x) { return abel->evaluate(x).second; };
  auto tab = std::make_shared<FlowTable>(table);

  InverseResult out{GeneratorSpec::custom(f, df, lo, hi, "abel(" + g.label() + ")"),
                    [tab](double x) { return tab->value(x); },
                    [tab](double y) { return tab->inverse(y); },
                    lo,
                    hi,
                    eps};
  return out;
}

EquivalenceReport verify_metric_equivalence(const GeneratorSpec& f, double eps,
                                            const WaveFunction& psi0, double T,
                                            const EquivalenceOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const MetricProfile g = metric_from_generator(f, eps, opts.unitary.flow);
  const TimeGrid time = TimeGrid::span(0.0, T, opts.dt, std::numeric_limits<std::size_t>::max());

  const WaveFunction y0 = apply_point_unitary_adjoint(f, eps, psi0, opts.unitary);
  const MassProfile m{TimeProfile::constant(opts.mass)};
  const FrequencyProfile zero{TimeProfile::constant(0.0)};
  // V = 0: a single split step is the exact free evolution.
  const TimeGrid one = TimeGrid::span(0.0, T, T == 0.0 ? 1.0 : T);
  const WaveFunction y1 = split_step_propagate(m, zero, y0, one).final_state;
  const WaveFunction reference = apply_point_unitary(f, eps, y1, opts.unitary);

  CrankNicolsonOptions cn;
  cn.order = opts.order;
  const WaveFunction curved = crank_nicolson_curved(g, opts.mass, psi0, time, cn).final_state;

  EquivalenceReport report;
  report.fidelity = fidelity(curved, reference);
  report.distance = phase_aligned_distance(curved, reference);
  if (opts.halving_check) {
    const TimeGrid fine = TimeGrid::span(0.0, T, 0.5 * time.dt, std::numeric_limits<std::size_t>::max());
    const WaveFunction curved2 = crank_nicolson_curved(g, opts.mass, psi0, fine, cn).final_state;
    report.distance_half_dt = phase_aligned_distance(curved2, reference);
    if (*report.distance_half_dt > 0.0) report.halving_ratio = report.distance / *report.distance_half_dt;
  }
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace canonflow
