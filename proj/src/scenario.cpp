#include "canonflow/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "canonflow/error.hpp"

namespace canonflow {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kModule = "cli";

[[noreturn]] void bad(const std::string& ctx, const std::string& what) {
  throw Error(ErrorKind::ScenarioError, kModule, ctx + ": " + what);
}

const json& object(const json& j, const std::string& ctx) {
  if (!j.is_object()) bad(ctx, "expected an object");
  return j;
}

void allow(const json& j, std::initializer_list<const char*> keys, const std::string& ctx) {
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) bad(ctx, "unknown key '" + it.key() + "'");
  }
}

double number(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) bad(ctx, std::string("missing '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) bad(ctx, std::string("'") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(ctx, std::string("'") + key + "' must be finite");
  return d;
}

double number_or(const json& j, const char* key, double fallback, const std::string& ctx) {
  return j.contains(key) ? number(j, key, ctx) : fallback;
}

std::string text(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || !j.at(key).is_string()) bad(ctx, std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::string resolve(const std::string& base, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base) / p).string();
}

Grid parse_grid(const json& j) {
  const std::string ctx = "grid";
  object(j, ctx);
  allow(j, {"x0", "dx", "lo", "hi", "n"}, ctx);
  const double n = number(j, "n", ctx);
  if (n < 8 || n != std::floor(n)) bad(ctx, "'n' must be an integer >= 8");
  const auto count = static_cast<std::size_t>(n);
  if (j.contains("lo") || j.contains("hi")) return Grid::over(number(j, "lo", ctx), number(j, "hi", ctx), count);
  return Grid(number(j, "x0", ctx), number(j, "dx", ctx), count);
}

TimeProfile parse_profile(const json& j, const std::string& ctx) {
  object(j, ctx);
  const std::string kind = text(j, "kind", ctx);
  if (kind == "constant") {
    allow(j, {"kind", "value"}, ctx);
    return TimeProfile::constant(number(j, "value", ctx));
  }
  if (kind == "exponential") {
    allow(j, {"kind", "initial", "rate"}, ctx);
    return TimeProfile::exponential(number(j, "initial", ctx), number(j, "rate", ctx));
  }
  bad(ctx, "unknown profile kind '" + kind + "'");
}

SolvableFamily parse_family(const json& j) {
  const std::string ctx = "system.family";
  object(j, ctx);
  allow(j, {"m0", "mu", "nu", "alpha", "Omega0", "oscillatory", "gamma"}, ctx);
  SolvableFamily f;
  if (j.contains("gamma")) {
    // Caldirola-Kanai shorthand: m = m0 e^{gamma t}.
    f = SolvableFamily::caldirola_kanai(number_or(j, "m0", 1.0, ctx), number(j, "gamma", ctx),
                                        number(j, "Omega0", ctx));
  } else {
    f.m0 = number_or(j, "m0", 1.0, ctx);
    f.mu = number(j, "mu", ctx);
    f.nu = number(j, "nu", ctx);
    f.alpha = number(j, "alpha", ctx);
    f.Omega0 = number(j, "Omega0", ctx);
    if (j.contains("oscillatory")) {
      if (!j.at("oscillatory").is_boolean()) bad(ctx, "'oscillatory' must be a boolean");
      f.oscillatory = j.at("oscillatory").get<bool>();
    }
  }
  f.validate();
  return f;
}

OscillatorSystem parse_oscillator(const json& j) {
  const std::string ctx = "system";
  allow(j, {"type", "family", "mass", "frequency"}, ctx);
  if (j.contains("family")) {
    if (j.contains("mass") || j.contains("frequency")) bad(ctx, "give either 'family' or 'mass'/'frequency'");
    const SolvableFamily f = parse_family(j.at("family"));
    return {f.mass_profile(), f.frequency_profile(), f};
  }
  if (!j.contains("mass") || !j.contains("frequency")) bad(ctx, "oscillator needs 'family' or 'mass' and 'frequency'");
  return {MassProfile{parse_profile(j.at("mass"), "system.mass")},
          FrequencyProfile{parse_profile(j.at("frequency"), "system.frequency")}, std::nullopt};
}

GeneratorSpec parse_generator(const json& j, const std::string& ctx) {
  const std::string f = text(j, "f", ctx);
  if (f == "linear") return GeneratorSpec::linear();
  if (f == "quadratic") return GeneratorSpec::quadratic();
  if (f == "expdecay" || f == "exp_decay") return GeneratorSpec::exp_decay(number_or(j, "lambda", 1.0, ctx));
  bad(ctx, "unknown generator '" + f + "'");
}

CurvedSystem parse_curved(const json& j, const std::string& base) {
  const std::string ctx = "system";
  allow(j, {"type", "metric", "mass"}, ctx);
  const double mass = number_or(j, "mass", 1.0, ctx);
  if (!(mass > 0.0)) bad(ctx, "'mass' must be positive");
  if (!j.contains("metric")) bad(ctx, "curved system needs 'metric'");
  const json& m = object(j.at("metric"), "system.metric");
  const std::string kind = text(m, "kind", "system.metric");
  if (kind == "constant") {
    allow(m, {"kind", "value"}, "system.metric");
    return {MetricProfile::constant(number(m, "value", "system.metric")), mass, std::nullopt};
  }
  if (kind == "csv") {
    allow(m, {"kind", "path"}, "system.metric");
    return {MetricProfile::from_csv(resolve(base, text(m, "path", "system.metric"))), mass, std::nullopt};
  }
  if (kind == "generator") {
    allow(m, {"kind", "f", "lambda", "eps"}, "system.metric");
    const GeneratorSpec f = parse_generator(m, "system.metric");
    const double eps = number(m, "eps", "system.metric");
    return {metric_from_generator(f, eps), mass, std::make_pair(f, eps)};
  }
  bad("system.metric", "unknown metric kind '" + kind + "'");
}

WaveFunction parse_initial(const json& j, const std::optional<Grid>& grid, const std::string& base) {
  const std::string ctx = "initial_state";
  object(j, ctx);
  const std::string type = text(j, "type", ctx);
  if (type == "gaussian") {
    allow(j, {"type", "A_re", "A_im", "x_bar", "p_bar", "phase"}, ctx);
    if (!grid) bad("grid", "a Gaussian initial state needs a grid");
    const GaussianState g{{number(j, "A_re", ctx), number_or(j, "A_im", 0.0, ctx)},
                          number_or(j, "x_bar", 0.0, ctx), number_or(j, "p_bar", 0.0, ctx),
                          number_or(j, "phase", 0.0, ctx)};
    if (!(g.width.real() > 0.0)) bad(ctx, "'A_re' must be positive");
    return g.rasterize(*grid);
  }
  if (type == "csv") {
    allow(j, {"type", "path"}, ctx);
    WaveFunction psi = read_wavefunction_csv(resolve(base, text(j, "path", ctx)));
    if (grid && !(psi.grid() == *grid)) bad(ctx, "CSV state does not match the scenario grid");
    return psi;
  }
  bad(ctx, "unknown initial state type '" + type + "'");
}

Method parse_method(const std::string& s) {
  if (s == "split-step" || s == "split_step") return Method::SplitStep;
  if (s == "crank-nicolson" || s == "crank_nicolson") return Method::CrankNicolson;
  if (s == "exact") return Method::Exact;
  bad("propagator", "unknown method '" + s + "'");
}

// (a, b) of H(t) = a p^2 + b x^2.
std::pair<double, double> oscillator_coefficients(const OscillatorSystem& s, double t) {
  const double m = s.mass.at(t).value;
  const double w = s.frequency.at(t).value;
  return {0.5 / m, 0.5 * m * w * w};
}

TrajectoryRow measure(const WaveFunction& psi, double t, double a, double b) {
  TrajectoryRow row;
  row.t = t;
  row.norm = psi.norm();
  const WaveFunction unit = psi.normalized();
  row.x_mean = expectation(Observable::x(), unit).value;
  row.p_mean = expectation(Observable::p(), unit).value;
  row.energy = expectation(Observable::quadratic(a, b, 0.0), unit).value;
  return row;
}

// Rows sampled from a closed-form evolution, on the same output times as
// the integrators.
Trajectory sampled_run(const ExactReference& state, const TimeGrid& time,
                       const std::function<std::pair<double, double>(double)>& coeffs,
                       const std::function<double(const WaveFunction&)>& energy = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> marks;
  for (std::size_t k = 0; k < time.steps; k += time.stride) marks.push_back(k);
  marks.push_back(time.steps);
  std::vector<TrajectoryRow> rows;
  std::optional<WaveFunction> last;
  double drift = 0.0;
  for (std::size_t k : marks) {
    const double t = time.time(k);
    last = state(t);
    const auto [a, b] = coeffs(t);
    TrajectoryRow row = measure(*last, t, a, b);
    if (energy) row.energy = energy(last->normalized());
    row.fidelity_vs_exact = 1.0;
    if (!rows.empty()) drift = std::max(drift, std::abs(row.norm - rows.front().norm));
    rows.push_back(row);
  }
  StepperReport rep;
  rep.steps = time.steps;
  rep.max_norm_drift = drift;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(rows), *last, rep};
}

ExactReference conjugated_free(const GeneratorSpec& f, double eps, double mass, const WaveFunction& psi0) {
  const WaveFunction y = apply_point_unitary_adjoint(f, eps, psi0);
  return [f, eps, mass, y](double t) {
    if (t == 0.0) return apply_point_unitary(f, eps, y);
    const auto free = split_step_propagate({TimeProfile::constant(mass)}, {TimeProfile::constant(0.0)}, y,
                                           TimeGrid::span(0.0, t, t));
    return apply_point_unitary(f, eps, free.final_state);
  };
}

void write_plot(const std::string& path, const Scenario& s) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, kModule, "cannot write " + path);
  os << "# gnuplot " << path << "\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 't'\n"
     << "set terminal pngcairo size 1200,800\n"
     << "set output 'trajectory.png'\n"
     << "set multiplot layout 2,2 title '" << s.name << " (" << to_string(s.method) << ")'\n"
     << "plot 'trajectory.csv' using 1:4 with lines, '' using 1:5 with lines\n"
     << "plot 'trajectory.csv' using 1:6 with lines\n"
     << "plot 'trajectory.csv' using 1:2 with lines\n"
     << "plot 'trajectory.csv' using 1:(1-$3) with lines title '1 - fidelity_vs_exact'\n"
     << "unset multiplot\n";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::SplitStep: return "split-step";
    case Method::CrankNicolson: return "crank-nicolson";
    case Method::Exact: return "exact";
  }
  return "?";
}

Scenario parse_scenario(std::string_view json_text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ScenarioError, kModule, std::string("scenario is not valid JSON: ") + e.what());
  }
  object(doc, "scenario");
  allow(doc, {"name", "system", "initial_state", "grid", "propagator", "outputs"}, "scenario");
  for (const char* key : {"system", "initial_state", "propagator"}) {
    if (!doc.contains(key)) bad("scenario", std::string("missing '") + key + "'");
  }

  std::optional<Grid> grid;
  if (doc.contains("grid")) grid = parse_grid(doc.at("grid"));

  Scenario s;
  s.initial = parse_initial(doc.at("initial_state"), grid, base_dir);
  s.name = doc.contains("name") ? text(doc, "name", "scenario") : "scenario";
  s.echo = doc.dump(2);

  const json& sys = object(doc.at("system"), "system");
  const std::string type = text(sys, "type", "system");
  if (type == "oscillator") {
    s.oscillator = parse_oscillator(sys);
  } else if (type == "curved") {
    s.curved = parse_curved(sys, base_dir);
  } else {
    bad("system", "unknown type '" + type + "'");
  }

  const json& prop = object(doc.at("propagator"), "propagator");
  allow(prop, {"method", "dt", "T", "stride", "m_ref"}, "propagator");
  s.method = parse_method(text(prop, "method", "propagator"));
  s.T = number(prop, "T", "propagator");
  s.dt = number_or(prop, "dt", 1e-3, "propagator");
  if (!(s.dt > 0.0)) bad("propagator", "'dt' must be positive");
  if (!(s.T > 0.0)) bad("propagator", "'T' must be positive");
  const double stride = number_or(prop, "stride", 1.0, "propagator");
  if (stride < 1 || stride != std::floor(stride)) bad("propagator", "'stride' must be a positive integer");
  s.stride = static_cast<std::size_t>(stride);
  if (prop.contains("m_ref")) {
    s.m_ref = number(prop, "m_ref", "propagator");
    if (!(*s.m_ref > 0.0)) bad("propagator", "'m_ref' must be positive");
  }

  if (s.curved && s.method == Method::SplitStep) {
    bad("propagator", "split-step does not apply to a curved metric; use crank-nicolson");
  }
  if (s.oscillator && s.method == Method::CrankNicolson) {
    bad("propagator", "crank-nicolson is implemented for curved systems; use split-step");
  }
  if (s.method == Method::Exact && ((s.oscillator && !s.oscillator->family) || (s.curved && !s.curved->generator))) {
    bad("propagator", "the exact method needs a solvable family or a generator-derived metric");
  }
  if (s.curved) {
    for (std::size_t k = 0; k < s.initial.size(); ++k) s.curved->metric(s.initial.grid().x(k));
  }
  if (!satisfies_edge_decay(s.initial)) {
    bad("grid", "the initial state does not decay at the grid edges; widen the grid");
  }

  s.formats = {"csv", "json", "gnuplot", "state"};
  if (doc.contains("outputs")) {
    const json& out = object(doc.at("outputs"), "outputs");
    allow(out, {"directory", "formats"}, "outputs");
    if (out.contains("directory")) s.output_dir = resolve(base_dir, text(out, "directory", "outputs"));
    if (out.contains("formats")) {
      if (!out.at("formats").is_array()) bad("outputs", "'formats' must be an array");
      s.formats.clear();
      for (const auto& f : out.at("formats")) {
        if (!f.is_string()) bad("outputs", "formats must be strings");
        const std::string name = f.get<std::string>();
        if (name != "csv" && name != "json" && name != "gnuplot" && name != "state") {
          bad("outputs", "unknown format '" + name + "'");
        }
        s.formats.push_back(name);
      }
    }
  } else {
    s.output_dir = resolve(base_dir, s.output_dir);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, kModule, "cannot read scenario " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), fs::path(path).parent_path().string());
}

RunOutcome run_scenario(const Scenario& s, const std::string& out_dir) {
  const TimeGrid time = TimeGrid::span(0.0, s.T, s.dt, s.stride);
  Trajectory traj{{}, s.initial, {}};

  if (s.oscillator) {
    const OscillatorSystem& osc = *s.oscillator;
    auto coeffs = [&osc](double t) { return oscillator_coefficients(osc, t); };
    ExactReference exact;
    if (osc.family) {
      const SolvableFamily fam = *osc.family;
      ExactOptions eo;
      eo.m_ref = s.m_ref;
      const double m_ref = s.m_ref.value_or(fam.mass_profile().at(0.0).value);
      auto basis = std::make_shared<HermiteBasis>(HermiteBasis::fitted(s.initial.grid(), m_ref, fam.Omega0));
      exact = [fam, eo, basis, psi0 = s.initial](double t) {
        return exact_solvable_propagate(fam, psi0, t, *basis, eo);
      };
    }
    if (s.method == Method::Exact) {
      traj = sampled_run(exact, time, coeffs);
    } else {
      SplitStepOptions so;
      so.exact = exact;
      traj = split_step_propagate(osc.mass, osc.frequency, s.initial, time, so);
    }
  } else {
    const CurvedSystem& cs = *s.curved;
    ExactReference exact;
    if (cs.generator) exact = conjugated_free(cs.generator->first, cs.generator->second, cs.mass, s.initial);
    if (s.method == Method::Exact) {
      const BandedMatrix h = curved_hamiltonian_matrix(cs.metric, cs.mass, s.initial.grid());
      auto energy = [h](const WaveFunction& psi) {
        const auto hp = h.apply(psi.values());
        cplx acc = 0.0;
        for (std::size_t k = 0; k < hp.size(); ++k) acc += std::conj(psi[k]) * hp[k];
        return acc.real() * psi.grid().dx();
      };
      traj = sampled_run(exact, time, [](double) { return std::make_pair(0.0, 0.0); }, energy);
    } else {
      CrankNicolsonOptions co;
      co.exact = exact;
      traj = crank_nicolson_curved(cs.metric, cs.mass, s.initial, time, co);
    }
  }

  RunOutcome out{std::move(traj), out_dir.empty() ? s.output_dir : out_dir, {}};
  std::error_code ec;
  fs::create_directories(out.output_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, kModule, "cannot create " + out.output_dir + ": " + ec.message());
  auto path = [&](const char* name) { return (fs::path(out.output_dir) / name).string(); };
  auto wants = [&](const char* f) { return std::find(s.formats.begin(), s.formats.end(), f) != s.formats.end(); };

  if (wants("csv")) {
    write_trajectory_csv(path("trajectory.csv"), out.trajectory);
    out.written.push_back(path("trajectory.csv"));
  }
  if (wants("state")) {
    write_wavefunction_csv(path("final_state.csv"), out.trajectory.final_state);
    out.written.push_back(path("final_state.csv"));
  }
  if (wants("gnuplot")) {
    write_plot(path("plot.gp"), s);
    out.written.push_back(path("plot.gp"));
  }
  if (wants("json")) {
    const auto& rep = out.trajectory.report;
    const TrajectoryRow& last = out.trajectory.rows.back();
    json report = {
        {"library", {{"name", "canonflow"}, {"version", std::string(kVersion)}}},
        {"scenario", json::parse(s.echo)},
        {"method", std::string(to_string(s.method))},
        {"report",
         {{"steps", rep.steps},
          {"max_norm_drift", rep.max_norm_drift},
          {"max_residual", rep.max_residual},
          {"wall_time", rep.wall_time}}},
        {"final",
         {{"t", last.t},
          {"norm", last.norm},
          {"fidelity_vs_exact", number_or_null(last.fidelity_vs_exact)},
          {"x_mean", last.x_mean},
          {"p_mean", last.p_mean},
          {"energy", last.energy}}},
    };
    out.written.push_back(path("report.json"));
    report["artifacts"] = out.written;
    std::ofstream os(path("report.json"));
    if (!os) throw Error(ErrorKind::IoError, kModule, "cannot write " + path("report.json"));
    os << report.dump(2) << "\n";
  }
  return out;
}

}  // namespace canonflow
