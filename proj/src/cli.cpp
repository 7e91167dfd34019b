#include "canonflow/cli.hpp"

#include <cstdlib>
#include <memory>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "canonflow/error.hpp"
#include "canonflow/flowcore.hpp"
#include "canonflow/hamiltonians.hpp"
#include "canonflow/metricmap.hpp"
#include "canonflow/scenario.hpp"
#include "canonflow/verify.hpp"

namespace canonflow {
namespace {

using json = nlohmann::json;

struct GeneratorArgs {
  std::string f;
  double lambda = 1.0;
  bool ode = false;

  GeneratorSpec build() const {
    GeneratorSpec g = f == "linear"      ? GeneratorSpec::linear()
                      : f == "quadratic" ? GeneratorSpec::quadratic()
                                         : GeneratorSpec::exp_decay(lambda);
    return ode ? g.as_custom() : g;
  }
};

void add_generator(CLI::App* cmd, GeneratorArgs& g, bool required = true) {
  auto* opt = cmd->add_option("--f", g.f, "generator f(x)")
                  ->check(CLI::IsMember({"linear", "quadratic", "expdecay"}));
  if (required) opt->required();
  cmd->add_option("--lambda", g.lambda, "decay rate for f = exp(-lambda x)");
  cmd->add_flag("--ode", g.ode, "evaluate through the adaptive ODE path");
}

void error_json(std::ostream& err, std::string_view kind, std::string_view module, std::string_view message) {
  json j = {{"error", {{"kind", kind}, {"module", module}, {"message", message}}}};
  err << j.dump() << "\n";
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t k = 0; k < n; ++k) xs[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return xs;
}

json check_json(const CheckResult& r) {
  json metrics = json::array();
  for (const auto& m : r.metrics) {
    metrics.push_back({{"name", m.name},
                       {"value", m.value},
                       {"bound", m.bound},
                       {"comparison", m.upper ? "<=" : ">="},
                       {"passed", m.passed()}});
  }
  json j = {{"id", r.id},       {"module", r.module},   {"title", r.title}, {"passed", r.passed},
            {"metrics", metrics}, {"notes", r.notes}, {"wall_time", r.wall_time}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"canonflow: canonical point transformations for time-dependent quantum systems"};
  app.name("canonflow");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  GeneratorArgs flow_gen;
  double flow_eps = 0.0;
  std::vector<double> flow_x;
  std::string flow_quantity = "x";
  auto* flow = app.add_subcommand("flow", "evaluate the flow map and momentum weight");
  add_generator(flow, flow_gen);
  flow->add_option("--eps", flow_eps, "flow parameter")->required();
  flow->add_option("--x", flow_x, "evaluation points")->required();
  flow->add_option("--quantity", flow_quantity, "x (flow map), f2, jacobian or all")
      ->check(CLI::IsMember({"x", "f2", "jacobian", "all"}));

  QuadraticHamiltonian tr_h{0.5, 0.5, 0.0};
  std::optional<double> tr_eps, tr_deps, tr_chi, tr_dchi;
  auto* transform = app.add_subcommand("transform", "coefficient algebra for H = a p^2 + b x^2 + (c/2){x,p}");
  transform->add_option("--a", tr_h.a, "p^2 coefficient");
  transform->add_option("--b", tr_h.b, "x^2 coefficient");
  transform->add_option("--c", tr_h.c, "(1/2){x,p} coefficient");
  transform->add_option("--eps", tr_eps, "dilation parameter");
  transform->add_option("--deps", tr_deps, "time derivative of eps");
  transform->add_option("--chi", tr_chi, "quadratic-phase parameter, applied after the dilation");
  transform->add_option("--dchi", tr_dchi, "time derivative of chi");

  SolvableFamily fam;
  double sv_t0 = 0.0, sv_t1 = 5.0, sv_dt = 0.5;
  auto* solvable = app.add_subcommand("solvable", "tabulate m(t), omega(t) and Omega(t) for a solvable family");
  solvable->add_option("--m0", fam.m0);
  solvable->add_option("--mu", fam.mu);
  solvable->add_option("--nu", fam.nu);
  solvable->add_option("--alpha", fam.alpha);
  solvable->add_option("--Omega0", fam.Omega0);
  solvable->add_flag("--oscillatory", fam.oscillatory, "read alpha as beta in m0 (mu cos + nu sin)^2");
  solvable->add_option("--t0", sv_t0);
  solvable->add_option("--t1", sv_t1);
  solvable->add_option("--dt", sv_dt)->check(CLI::PositiveNumber);

  std::string scenario_path, out_dir;
  auto* propagate = app.add_subcommand("propagate", "run a scenario file");
  propagate->alias("run");
  propagate->add_option("scenario", scenario_path, "scenario JSON")->required();
  propagate->add_option("--out", out_dir, "output directory (overrides CANONFLOW_OUT and the scenario)");

  std::string suite = "acceptance", verify_format = "json";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* verify = app.add_subcommand("verify", "run the acceptance or property suites");
  verify->add_option("--suite", suite, "acceptance, per-module, all, or a module name");
  verify->add_option("--threads", threads)->check(CLI::PositiveNumber);
  verify->add_option("--format", verify_format)->check(CLI::IsMember({"json", "text"}));

  auto* metric = app.add_subcommand("metric", "metric <-> generator tools");
  metric->require_subcommand(1);
  GeneratorArgs mg;
  double mg_eps = 0.0, mg_lo = -4.0, mg_hi = 4.0;
  std::size_t mg_n = 101;
  auto* from_gen = metric->add_subcommand("from-generator", "tabulate g = F2^-2 for a generator");
  add_generator(from_gen, mg);
  from_gen->add_option("--eps", mg_eps)->required();
  from_gen->add_option("--lo", mg_lo);
  from_gen->add_option("--hi", mg_hi);
  from_gen->add_option("--n", mg_n)->check(CLI::Range(2, 1000000));

  GeneratorArgs ig;
  std::string ig_csv;
  double ig_eps = 0.0, ig_anchor = 0.0, ig_lo = -4.0, ig_hi = 4.0;
  std::optional<double> ig_image, ig_check_lo, ig_check_hi;
  std::size_t ig_n = 101;
  auto* to_gen = metric->add_subcommand("to-generator", "solve the inverse problem for a metric");
  to_gen->add_option("--metric-csv", ig_csv, "metric table with header x,g");
  add_generator(to_gen, ig, false);
  to_gen->add_option("--eps", ig_eps)->required();
  to_gen->add_option("--anchor", ig_anchor);
  to_gen->add_option("--lo", ig_lo, "working interval");
  to_gen->add_option("--hi", ig_hi, "working interval");
  to_gen->add_option("--anchor-image", ig_image, "phi(anchor); defaults to anchor + eps");
  to_gen->add_option("--check-lo", ig_check_lo, "output range; defaults to the points whose image stays in the working interval");
  to_gen->add_option("--check-hi", ig_check_hi);
  to_gen->add_option("--n", ig_n)->check(CLI::Range(2, 1000000));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    error_json(err, "UsageError", "cli", e.what());
    return kExitUsage;
  }

  try {
    if (flow->parsed()) {
      const GeneratorSpec f = flow_gen.build();
      if (flow_quantity == "all") out << "x,x_out,f2,jacobian\n";
      for (double x : flow_x) {
        const FlowEvaluation ev = evaluate_flow(f, flow_eps, x);
        if (flow_quantity == "x") {
          out << format_double(ev.x_out) << "\n";
        } else if (flow_quantity == "f2") {
          out << format_double(ev.f2) << "\n";
        } else if (flow_quantity == "jacobian") {
          out << format_double(ev.jacobian) << "\n";
        } else {
          out << format_double(x) << "," << format_double(ev.x_out) << "," << format_double(ev.f2) << ","
              << format_double(ev.jacobian) << "\n";
        }
      }
      return kExitOk;
    }

    if (transform->parsed()) {
      QuadraticHamiltonian h = tr_h;
      if (tr_eps || tr_deps) h = dilation_transform(h, tr_eps.value_or(0.0), tr_deps.value_or(0.0));
      if (tr_chi || tr_dchi) h = quadratic_phase_transform(h, tr_chi.value_or(0.0), tr_dchi.value_or(0.0));
      out << json{{"a", h.a}, {"b", h.b}, {"c", h.c}}.dump() << "\n";
      return kExitOk;
    }

    if (solvable->parsed()) {
      fam.validate();
      const MassProfile m = fam.mass_profile();
      const FrequencyProfile w = fam.frequency_profile();
      out << "t,m,omega,Omega\n";
      const TimeGrid grid = TimeGrid::span(sv_t0, sv_t1, sv_dt);
      for (std::size_t k = 0; k <= grid.steps; ++k) {
        const double t = grid.time(k);
        out << format_double(t) << "," << format_double(m.at(t).value) << ","
            << format_double(omega_from_mass(m, fam.Omega0, t)) << ","
            << format_double(effective_frequency(m, w, t)) << "\n";
      }
      return kExitOk;
    }

    if (propagate->parsed()) {
      const Scenario s = load_scenario(scenario_path);
      std::string dir = out_dir;
      if (dir.empty()) {
        if (const char* env = std::getenv("CANONFLOW_OUT"); env && *env) dir = env;
      }
      const RunOutcome r = run_scenario(s, dir);
      const TrajectoryRow& last = r.trajectory.rows.back();
      json summary = {{"scenario", s.name},
                      {"method", std::string(to_string(s.method))},
                      {"output_dir", r.output_dir},
                      {"artifacts", r.written},
                      {"steps", r.trajectory.report.steps},
                      {"max_norm_drift", r.trajectory.report.max_norm_drift},
                      {"final_norm", last.norm}};
      summary["final_fidelity_vs_exact"] =
          std::isfinite(last.fidelity_vs_exact) ? json(last.fidelity_vs_exact) : json(nullptr);
      out << summary.dump(2) << "\n";
      return kExitOk;
    }

    if (verify->parsed()) {
      const auto results = run_checks(suite_checks(suite), threads);
      std::size_t failed = 0;
      for (const auto& r : results) failed += r.passed ? 0 : 1;
      if (verify_format == "text") {
        for (const auto& r : results) {
          out << (r.passed ? "PASS " : "FAIL ") << r.id << "  " << r.title << "\n";
          if (!r.error.empty()) out << "     error: " << r.error << "\n";
        }
        out << (results.size() - failed) << "/" << results.size() << " passed\n";
      } else {
        json checks = json::array();
        for (const auto& r : results) checks.push_back(check_json(r));
        out << json{{"suite", suite},
                    {"passed", failed == 0},
                    {"total", results.size()},
                    {"failed", failed},
                    {"checks", checks}}
                   .dump(2)
            << "\n";
      }
      return failed == 0 ? kExitOk : kExitChecksFailed;
    }

    if (from_gen->parsed()) {
      const MetricProfile g = metric_from_generator(mg.build(), mg_eps);
      out << "x,g\n";
      for (double x : linspace(mg_lo, mg_hi, mg_n)) out << format_double(x) << "," << format_double(g(x)) << "\n";
      return kExitOk;
    }

    if (to_gen->parsed()) {
      if (ig_csv.empty() == ig.f.empty()) {
        error_json(err, "UsageError", "cli", "give exactly one of --metric-csv or --f");
        return kExitUsage;
      }
      const MetricProfile g = ig_csv.empty() ? metric_from_generator(ig.build(), ig_eps) : MetricProfile::from_csv(ig_csv);
      InverseOptions io;
      io.anchor_image = ig_image;
      const InverseResult inv = generator_from_metric(g, ig_eps, ig_anchor, ig_lo, ig_hi, io);
      const MetricProfile back = metric_from_generator(inv.generator, ig_eps);
      out << "x,phi,f,g,g_roundtrip\n";
      // By default only points whose image stays in the working interval.
      const double first = inv.flow(ig_lo) < ig_lo ? inv.inverse_flow(ig_lo) : ig_lo;
      const double last = inv.flow(ig_hi) > ig_hi ? inv.inverse_flow(ig_hi) : ig_hi;
      for (double x : linspace(ig_check_lo.value_or(first), ig_check_hi.value_or(last), ig_n)) {
        out << format_double(x) << "," << format_double(inv.flow(x)) << "," << format_double(inv.generator.value(x))
            << "," << format_double(g(x)) << "," << format_double(back(x)) << "\n";
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    error_json(err, to_string(e.kind()), e.module(), e.what());
    return e.kind() == ErrorKind::ScenarioError ? kExitUsage : kExitDomainError;
  } catch (const std::exception& e) {
    error_json(err, "InternalError", "cli", e.what());
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace canonflow
