#pragma once

// Executable acceptance criteria and per-module property checks, shared by
// the acceptance test binary and the `verify` subcommand.

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace canonflow {

struct Metric {
  std::string name;
  double value = 0.0;
  double bound = 0.0;  // value must satisfy the comparison against bound
  bool upper = true;   // true: value <= bound, false: value >= bound
  bool passed() const { return upper ? value <= bound : value >= bound; }
};

struct CheckResult {
  std::string id;
  std::string module;
  std::string title;
  bool passed = false;
  std::vector<Metric> metrics;
  std::vector<std::string> notes;  // logged discrepancies, not failures
  std::string error;               // set when the check threw
  double wall_time = 0.0;
};

struct Check {
  std::string id;
  std::string module;
  std::string title;
  std::function<void(CheckResult&)> body;
};

std::vector<Check> acceptance_checks();
std::vector<Check> property_checks();

/// "acceptance", "per-module", "all", or a module name.
std::vector<Check> suite_checks(const std::string& suite);

/// Runs checks on up to `threads` workers; results keep the input order.
std::vector<CheckResult> run_checks(const std::vector<Check>& checks, unsigned threads = 1);

}  // namespace canonflow
