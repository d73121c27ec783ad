#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "samplan/casemix.hpp"
#include "samplan/engine.hpp"
#include "samplan/mcmc.hpp"
#include "samplan/population.hpp"

namespace samplan {

// Per-observation Fisher information of the logistic model at the reference
// model's effective coefficients, including the intercept row/column.
struct UnitInformation {
  Eigen::MatrixXd matrix;  // (P+1) x (P+1), symmetric PSD
  std::int64_t source_rows = 0;
};

// Coefficient draws standing in for fitted models; raw-column scale,
// intercept first.
struct CoefficientDraws {
  Eigen::MatrixXd draws;  // n_draws x (P+1)
  enum class Provenance { mvn, bayes_onesample } provenance = Provenance::mvn;
  std::int64_t n_used = 0;  // the development sample size the draws represent
  std::vector<std::string> column_names;
};

// I = mean_i w_i x_i x_i' with w_i = p_i (1 - p_i) at the reference risks;
// x_i includes the leading 1. Deterministic block-parallel reduction.
// Throws on rank-deficient designs, naming the dependent columns.
UnitInformation unit_information(const CaseMix& casemix, const ReferenceModel& model);

// Draws from MVN(effective coefficients, n^-1 I^-1) via Cholesky with jitter
// escalation on numerically semi-definite covariances.
CoefficientDraws draw_mvn_models(const ReferenceModel& model, const UnitInformation& info,
                                 std::int64_t n, int draws, std::uint64_t rng_seed);

// One-sample Bayesian approximation: MH targeting
// p(beta) * MVN(beta_hat | beta, n^-1 I^-1), beta_hat fixed at the reference
// model's effective coefficients. Defaults per McmcConfig (burn-in 10000 for
// this path is set by the caller/config).
CoefficientDraws bayes_onesample(const ReferenceModel& model, const UnitInformation& info,
                                 std::int64_t n, const PriorSpec& prior, const McmcConfig& mcmc,
                                 std::uint64_t rng_seed, Diagnostics* diagnostics = nullptr);

// Treats each coefficient draw as one fitted model and reuses the metrics /
// summary machinery of the full simulation path. Winner selection draws one
// surrogate development sample per coefficient draw from the population.
ScenarioResult approx_scenario(const ScenarioConfig& config, const CoefficientDraws& draws,
                               const TargetPopulation& population,
                               const std::string& strategy_label);

}  // namespace samplan
