#pragma once

// Scenario files: a JSON description of one propagation run, validated
// before any computation, and the driver that turns it into artifacts.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "canonflow/flowcore.hpp"
#include "canonflow/gridspace.hpp"
#include "canonflow/hamiltonians.hpp"
#include "canonflow/metricmap.hpp"
#include "canonflow/propagators.hpp"

namespace canonflow {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Method { SplitStep, CrankNicolson, Exact };

struct CurvedSystem {
  MetricProfile metric;
  double mass = 1.0;
  // Set when g comes from a generator with constant eps; enables the
  // conjugated free evolution as the exact reference.
  std::optional<std::pair<GeneratorSpec, double>> generator;
};

struct OscillatorSystem {
  MassProfile mass;
  FrequencyProfile frequency;
  std::optional<SolvableFamily> family;
};

struct Scenario {
  std::string name;
  std::string echo;  // validated input, re-serialized with sorted keys
  std::optional<OscillatorSystem> oscillator;
  std::optional<CurvedSystem> curved;
  WaveFunction initial{Grid(0.0, 1.0, 8), std::vector<cplx>(8)};
  Method method = Method::SplitStep;
  double dt = 1e-3;
  double T = 1.0;
  std::size_t stride = 1;
  std::optional<double> m_ref;
  std::string output_dir = "out";
  std::vector<std::string> formats;  // subset of csv, json, gnuplot, state
};

/// Throws ScenarioError on schema violations; relative paths inside the
/// document resolve against base_dir.
Scenario parse_scenario(std::string_view json_text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

struct RunOutcome {
  Trajectory trajectory;
  std::string output_dir;
  std::vector<std::string> written;
};

/// Runs the scenario and writes the requested artifacts into out_dir
/// (or the scenario's directory when empty).
RunOutcome run_scenario(const Scenario& scenario, const std::string& out_dir = {});

std::string_view to_string(Method m) noexcept;

}  // namespace canonflow
