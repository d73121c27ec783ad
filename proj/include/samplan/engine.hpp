#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "samplan/casemix.hpp"
#include "samplan/metrics.hpp"
#include "samplan/population.hpp"
#include "samplan/strategies.hpp"

namespace samplan {

struct StrategyConfig {
  ModelKind kind = ModelKind::mle;
  std::string label;  // defaults to the kind name; must be unique per scenario
  int mle_max_iter = 100;
  double mle_tol = 1e-9;
  PenalizedConfig penalized;
  PriorSpec prior;
  McmcConfig mcmc;
  ForestConfig forest;
};

// Assurance criterion: P(lower <= metric <= upper) >= target_prob. Metric
// names match summary rows; threshold-dependent names may omit the "@t"
// suffix, which then resolves per block.
struct Criterion {
  std::string metric;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  double target_prob = 0.9;
  std::string id() const;
};

struct ScenarioConfig {
  std::vector<std::int64_t> n_values;
  int iterations = 1000;
  std::vector<StrategyConfig> strategies;
  std::vector<double> thresholds{0.5};
  std::uint64_t master_seed = 1;
  std::vector<Criterion> criteria;
  // Reference mixture; a single model has probability 1.
  std::vector<ReferenceModel> reference_models;
  std::vector<double> model_probs;
  std::int64_t population_size = 100000;
  int instability_sample = 2000;
  int curves_emitted = 200;
  std::vector<int> noise_variants;  // extra noise-column counts; empty = {0}
  bool emit_instability = true;

  void validate(Warnings* warnings = nullptr) const;
};

// Iteration-level results for one (n, variant) scenario.
struct MetricDraws {
  std::int64_t n = 0;
  std::string variant = "base";
  std::vector<double> thresholds;
  std::vector<std::string> strategy_labels;
  std::vector<std::vector<MetricDraw>> per_strategy;        // [strategy][iteration]
  std::vector<std::vector<std::uint8_t>> fit_failed;        // [strategy][iteration]
  std::vector<std::vector<std::string>> fit_errors;         // failure messages (sparse)
  std::vector<int> model_index;                             // [iteration]
};

struct MetricSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double p2_5 = std::numeric_limits<double>::quiet_NaN();
  double p97_5 = std::numeric_limits<double>::quiet_NaN();
  int n_missing = 0;
  int n_used = 0;
};

struct SummaryBlock {
  std::int64_t n = 0;
  std::string variant = "base";
  std::string strategy;
  double threshold = 0.0;
  std::string subgroup = "overall";
  std::vector<std::pair<std::string, MetricSummary>> metrics;   // fixed order
  std::vector<std::pair<std::string, double>> criterion_probs;  // id -> probability
};

struct SummaryReport {
  std::vector<SummaryBlock> blocks;
  std::uint64_t master_seed = 0;
  int iterations = 0;
  Warnings warnings;
};

struct InstabilityData {
  std::vector<std::int64_t> tracked_ids;                 // population row indices
  std::vector<std::vector<double>> tracked_truths;       // [reference model][tracked]
  std::vector<int> draw_model_index;                     // [iteration]
  struct PerStrategy {
    std::string strategy;
    std::vector<std::vector<double>> per_draw_risks;     // [iteration][tracked]
    std::vector<int> curve_draw_ids;
    std::vector<CalibrationCurve> curves;                // first curves_emitted by draw order
    std::vector<double> widths;                          // per tracked individual
    std::vector<std::vector<double>> misclass;           // [threshold][tracked]
  };
  std::vector<PerStrategy> strategies;
};

struct ScenarioResult {
  MetricDraws draws;
  SummaryReport summary;
  InstabilityData instability;
  // Iteration 0's fitted model per strategy (audit artifact), absent when
  // that fit failed.
  std::vector<std::optional<FittedModel>> first_models;
  double wall_seconds = 0.0;
};

// The one master split (disjoint row index sets) made before any simulation:
// first element reserves `population_size` seeded-random rows for the target
// population, second is the development pool.
std::pair<CaseMix, CaseMix> split_casemix(const CaseMix& master, std::int64_t population_size,
                                          std::uint64_t master_seed);

// Steps 5-9 for one development sample size (the first entry of n_values):
// iterate sample -> fit -> evaluate with per-iteration counter-based streams;
// results are identical for any OpenMP worker count.
ScenarioResult run_scenario(const ScenarioConfig& config, const CaseMix& master_casemix);

// Means, 95% ranges (type-7), missing counts and assurance probabilities.
// `instability` supplies the individual-level series (interval widths,
// misclassification probabilities) when present.
SummaryReport summarize(const ScenarioConfig& config, const MetricDraws& draws,
                        const InstabilityData* instability = nullptr);

struct SweepVerdict {
  std::string variant;
  std::string strategy;
  std::int64_t minimal_n = -1;  // -1 = none
  std::map<std::int64_t, bool> pass_by_n;
};

struct SweepResult {
  std::vector<ScenarioResult> runs;  // ordered by (variant, n)
  std::vector<SweepVerdict> verdicts;
};

// Step 10: one scenario per (variant, n); minimal configured n meeting every
// criterion, no interpolation.
SweepResult sweep(const ScenarioConfig& config, const CaseMix& master_casemix);

// Concatenates single-strategy results sharing one (n, variant) into one
// multi-strategy result (used by the fisher path).
ScenarioResult merge_scenario_results(std::vector<ScenarioResult> parts);

}  // namespace samplan
