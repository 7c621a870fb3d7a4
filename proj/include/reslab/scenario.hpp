#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "reslab/operator_models.hpp"

namespace reslab {

enum class ExperimentKind {
  SpectrumGrid,
  Continue,
  Egorov,
  Impacting,
  Classify,
  DetectBranchPoints,
  AbsorbingSweep,
  OracleCheck,
  RayStats,
};

struct Experiment {
  ExperimentKind kind;
  std::string type_name;
  nlohmann::json params;  // validated against the per-kind schema
};

struct Scenario {
  std::string name;
  unsigned long long seed = 0;
  nlohmann::json model_spec;
  std::function<RiggedModel(std::mt19937_64&)> build_model;
  std::vector<Experiment> experiments;
};

// Strict parsing: unknown keys, missing required keys and type mismatches
// raise ScenarioError with the offending key path in the message.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario_file(const std::string& path);

struct RunOptions {
  bool seed_override = false;
  unsigned long long seed = 0;
  int threads = 0;  // 0 = resolve from environment
  std::string out_dir = ".";
};

struct RunResult {
  nlohmann::ordered_json report;
  std::vector<std::string> files_written;
  int exit_code = 0;  // 0 clean, 1 failed checks or findings
};

RunResult run_scenario(const Scenario& scenario, const RunOptions& opts);

int run_cli(int argc, char** argv);

}  // namespace reslab
