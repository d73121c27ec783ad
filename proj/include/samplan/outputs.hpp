#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "samplan/config.hpp"
#include "samplan/engine.hpp"

namespace samplan {

// Shortest round-trip decimal representation; the one formatting used in
// every CSV so reruns are byte-identical.
std::string format_csv_double(double v);

// FNV-1a 64-bit over file bytes, hex-encoded; recorded in the manifest.
std::string file_hash_hex(const std::string& path);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

// Writes summary.csv, draws.csv, the instability files and report.json for a
// set of runs sharing one output directory. Multi-variant sweeps keep the
// spec'd file names for the base variant and suffix the others. Returns the
// list of files written.
std::vector<std::string> write_run_outputs(const std::string& directory,
                                           const ResolvedScenario& resolved,
                                           const std::vector<ScenarioResult>& runs,
                                           const std::vector<SweepVerdict>* verdicts,
                                           const std::string& command);

// verdict.json for sweep runs.
std::string write_verdict(const std::string& directory, const ScenarioConfig& config,
                          const std::vector<SweepVerdict>& verdicts);

// manifest.json: version, command, config echo, seeds, timings, artifact
// hashes. Written last; never hashes itself.
std::string write_manifest(const std::string& directory, const nlohmann::json& config_echo,
                           std::uint64_t master_seed, const std::vector<std::string>& artifacts,
                           const std::vector<StageTiming>& timings, const std::string& command);

nlohmann::json summary_to_json(const SummaryReport& report);

}  // namespace samplan
