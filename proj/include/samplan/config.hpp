#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "samplan/engine.hpp"

namespace samplan {

struct OutputConfig {
  std::string directory = "out";
  bool emit_instability = true;
  bool save_models = false;
};

// A fully resolved run: master case-mix built/loaded, reference models
// calibrated against the target-population split, engine config assembled.
struct ResolvedScenario {
  ScenarioConfig config;
  CaseMix master_casemix;
  OutputConfig outputs;
  std::vector<CalibrationReport> calibration_reports;
  nlohmann::json config_echo;  // the input document after overrides
};

struct CliOverrides {
  std::optional<std::int64_t> n;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

nlohmann::json load_config_file(const std::string& path);

// Parses + validates the config document and performs reference-model
// calibration. Throws ConfigError with the offending field path.
ResolvedScenario resolve_scenario(const nlohmann::json& config, const CliOverrides& overrides);

// Calibration-only run for `samplan calibrate`: the achieved-values report is
// returned even when the targets were not reached (converged=false, error
// message filled).
struct CalibrationRun {
  ReferenceModel model;
  CalibrationReport report;
  bool converged = false;
  std::string error;
  OutputConfig outputs;
  std::uint64_t master_seed = 0;
  nlohmann::json config_echo;
};
CalibrationRun resolve_calibration(const nlohmann::json& config, const CliOverrides& overrides);

}  // namespace samplan
