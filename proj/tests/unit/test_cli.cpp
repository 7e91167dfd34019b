#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "canonflow/cli.hpp"
#include "canonflow/error.hpp"
#include "canonflow/scenario.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace canonflow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("canonflow_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kShortCk = R"({
  "name": "ck-short",
  "system": {"type": "oscillator", "family": {"m0": 1, "gamma": 0.2, "Omega0": 1}},
  "initial_state": {"type": "gaussian", "A_re": 1, "x_bar": 1},
  "grid": {"lo": -12, "hi": 12, "n": 512},
  "propagator": {"method": "split-step", "dt": 0.002, "T": 0.5, "stride": 50}
})";

}  // namespace

TEST_CASE("flow subcommand") {
  const Run r = cli({"flow", "--f", "quadratic", "--eps", "0.25", "--x", "2.0"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "4.0\n");
  const Run all = cli({"flow", "--f", "linear", "--eps", "0.5", "--x", "1", "--quantity", "all"});
  CHECK(all.out.rfind("x,x_out,f2,jacobian\n1.0,", 0) == 0);
  const Run ode = cli({"flow", "--f", "expdecay", "--eps", "0.5", "--x", "0", "--ode"});
  CHECK(std::abs(std::stod(ode.out) - std::log(1.5)) < 1e-9);
}

TEST_CASE("errors carry kind and module") {
  const Run r = cli({"flow", "--f", "quadratic", "--eps", "0.5", "--x", "2"});
  CHECK(r.code == kExitDomainError);
  CHECK(r.err.find("\"kind\":\"DomainBlowup\"") != std::string::npos);
  CHECK(r.err.find("\"module\":\"flowcore\"") != std::string::npos);
  CHECK(cli({"flow", "--eps", "1"}).code == kExitUsage);
  CHECK(cli({"nonsense"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("transform subcommand") {
  const Run d = cli({"transform", "--eps", "0.1", "--deps", "0.2"});
  CHECK(d.out.find("\"c\":-0.2") != std::string::npos);
  const Run q = cli({"transform", "--a", "0.5", "--b", "0.5", "--chi", "1"});
  CHECK(q.out == "{\"a\":0.5,\"b\":1.0,\"c\":1.0}\n");
}

TEST_CASE("solvable subcommand") {
  const Run r = cli({"solvable", "--m0", "1", "--mu", "1", "--nu", "0", "--alpha", "0.1", "--Omega0", "1"});
  REQUIRE(r.code == kExitOk);
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,m,omega,Omega");
  int rows = 0;
  while (std::getline(is, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
    CHECK(std::abs(std::stod(line.substr(c2 + 1, c3 - c2 - 1)) - std::sqrt(1.01)) < 1e-12);
    ++rows;
  }
  CHECK(rows == 11);
  CHECK(cli({"solvable", "--mu", "0", "--nu", "0"}).code == kExitDomainError);
}

TEST_CASE("metric subcommands") {
  const Run g = cli({"metric", "from-generator", "--f", "quadratic", "--eps", "0.2", "--lo", "0", "--hi", "1", "--n", "2"});
  REQUIRE(g.out.rfind("x,g\n0.0,1.0\n1.0,", 0) == 0);
  CHECK(std::stod(g.out.substr(16)) == doctest::Approx(std::pow(0.8, -4.0)).epsilon(1e-14));
  const Run inv = cli({"metric", "to-generator", "--f", "expdecay", "--eps", "0.4", "--lo", "-4.5", "--hi", "5",
                       "--anchor-image", format_double(std::log(1.4)), "--n", "5"});
  CHECK(inv.code == kExitOk);
  CHECK(inv.out.rfind("x,phi,f,g,g_roundtrip\n-4.5,", 0) == 0);
  CHECK(inv.out.find("\n5.0,") == std::string::npos);
  const Run edge = cli({"metric", "to-generator", "--f", "expdecay", "--eps", "0.4", "--lo", "-4.5", "--hi", "5",
                        "--anchor-image", format_double(std::log(1.4)), "--check-lo", "5", "--check-hi", "5"});
  CHECK(edge.code == kExitDomainError);
  CHECK(edge.err.find("DomainBlowup") != std::string::npos);
  CHECK(cli({"metric", "to-generator", "--eps", "0.4"}).code == kExitUsage);
}

TEST_CASE("scenario run writes artifacts") {
  const fs::path dir = scratch("ck");
  const Scenario s = parse_scenario(kShortCk);
  CHECK(s.oscillator.has_value());
  CHECK(s.stride == 50);
  const RunOutcome a = run_scenario(s, (dir / "a").string());
  const RunOutcome b = run_scenario(s, (dir / "b").string());
  CHECK(a.written.size() == 4);
  const std::string csv = slurp(dir / "a" / "trajectory.csv");
  CHECK(csv.rfind("t,norm,fidelity_vs_exact,x_mean,p_mean,energy\n", 0) == 0);
  CHECK(csv == slurp(dir / "b" / "trajectory.csv"));
  CHECK(1.0 - a.trajectory.rows.back().fidelity_vs_exact < 1e-6);
  const std::string report = slurp(dir / "a" / "report.json");
  CHECK(report.find("\"version\": \"0.1.0\"") != std::string::npos);
  CHECK(report.find("\"max_norm_drift\"") != std::string::npos);
  CHECK(fs::exists(dir / "a" / "plot.gp"));
  CHECK(fs::exists(dir / "a" / "final_state.csv"));
}

TEST_CASE("propagate via the command line and CANONFLOW_OUT") {
  const fs::path dir = scratch("env");
  {
    std::ofstream os(dir / "ck.json");
    os << kShortCk;
  }
  setenv("CANONFLOW_OUT", (dir / "from_env").string().c_str(), 1);
  const Run r = cli({"run", (dir / "ck.json").string()});
  unsetenv("CANONFLOW_OUT");
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir / "from_env" / "trajectory.csv"));
  const Run o = cli({"propagate", (dir / "ck.json").string(), "--out", (dir / "flag").string()});
  CHECK(o.code == kExitOk);
  CHECK(fs::exists(dir / "flag" / "report.json"));
  CHECK(cli({"run", (dir / "missing.json").string()}).code == kExitDomainError);
}

TEST_CASE("scenario validation") {
  CHECK(error_kind([] { parse_scenario("{"); }) == ErrorKind::ScenarioError);
  CHECK(error_kind([] { parse_scenario(R"({"system": {}, "initial_state": {}, "propagator": {}, "extra": 1})"); }) ==
        ErrorKind::ScenarioError);
  std::string narrow = kShortCk;
  narrow.replace(narrow.find("\"lo\": -12, \"hi\": 12"), 19, "\"lo\": -3, \"hi\": 3");
  CHECK(error_kind([&] { parse_scenario(narrow); }) == ErrorKind::ScenarioError);
  std::string cn = kShortCk;
  cn.replace(cn.find("split-step"), 10, "crank-nicolson");
  CHECK(error_kind([&] { parse_scenario(cn); }) == ErrorKind::ScenarioError);
  const char* blowup = R"({
    "system": {"type": "curved", "metric": {"kind": "generator", "f": "quadratic", "eps": 0.25}},
    "initial_state": {"type": "gaussian", "A_re": 1},
    "grid": {"lo": -8, "hi": 8, "n": 512},
    "propagator": {"method": "crank-nicolson", "dt": 0.001, "T": 1}
  })";
  CHECK(error_kind([&] { parse_scenario(blowup); }) == ErrorKind::DomainBlowup);
}

TEST_CASE("curved scenario with the conjugated reference") {
  const char* curved = R"({
    "system": {"type": "curved", "metric": {"kind": "generator", "f": "expdecay", "eps": 0.4}},
    "initial_state": {"type": "gaussian", "A_re": 1, "x_bar": 5, "p_bar": 2},
    "grid": {"lo": -10, "hi": 20, "n": 1024},
    "propagator": {"method": "crank-nicolson", "dt": 0.002, "T": 0.2, "stride": 50},
    "outputs": {"formats": ["csv"]}
  })";
  const fs::path dir = scratch("curved");
  const RunOutcome r = run_scenario(parse_scenario(curved), dir.string());
  CHECK(r.written.size() == 1);
  CHECK(1.0 - r.trajectory.rows.back().fidelity_vs_exact < 1e-4);
}
