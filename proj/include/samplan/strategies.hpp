#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "samplan/casemix.hpp"
#include "samplan/mcmc.hpp"
#include "samplan/population.hpp"

#include "json.hpp"

namespace samplan {

enum class ModelKind { mle, shrunk, ridge_cv, lasso_cv, bayes_ridge, bayes_lasso, forest };

std::string to_string(ModelKind kind);

// Per-column location/scale from the development sample. Constant columns
// are dropped (used=false) and their slopes forced to 0.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> sd;  // 1.0 where !used
  std::vector<std::uint8_t> used;
};

struct TreeNode {
  int split_column = -1;  // -1 marks a leaf
  double split_value = 0.0;
  int left = -1;
  int right = -1;
  double leaf_probability = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  // Rows with x[split_column] <= split_value go left.
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  int depth() const;
};

struct Diagnostics {
  bool converged = true;
  std::optional<double> selected_lambda;
  std::optional<double> shrinkage_factor;
  std::optional<double> mcmc_acceptance;
  std::vector<std::string> dropped_columns;
  std::vector<std::string> notes;
};

// A trained strategy's prediction function: either a coefficient vector on
// the standardised scale (intercept first, full column length with zeros at
// dropped columns) or a forest over raw columns.
struct FittedModel {
  ModelKind kind = ModelKind::mle;
  std::vector<std::string> column_names;
  Standardization standardization;
  std::optional<Eigen::VectorXd> coefficients;
  std::vector<Tree> forest;
  Diagnostics diagnostics;
};

nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

// Unpenalised logistic MLE by IRLS on standardised predictors. Separation or
// non-convergence is flagged (converged=false), never thrown; an all-event
// or no-event sample throws DegenerateError.
FittedModel fit_mle_logistic(const DevelopmentSample& sample, int max_iter = 100,
                             double tol = 1e-9);

// Van Houwelingen-Le Cessie uniform shrinkage: S = (LR - P)/LR applied to
// the slopes, intercept re-estimated so mean predicted risk equals observed
// prevalence. S <= 0 collapses the model to the prevalence.
FittedModel shrink_uniform(const FittedModel& fitted, const DevelopmentSample& sample);

struct PenalizedConfig {
  int folds = 10;
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  double tol = 1e-7;  // KKT residual target
  std::optional<std::vector<double>> lambda_grid;  // overrides the automatic grid
};

// Coordinate-descent penalised logistic regression; lambda picked by
// stratified k-fold cross-validated deviance, final fit on the full sample.
FittedModel fit_penalized_cv(const DevelopmentSample& sample, PriorFamily family,
                             const PenalizedConfig& config, std::uint64_t rng_seed);

// Metropolis-Hastings over (intercept, slopes, lambda^2) with the exact
// logistic likelihood on standardised predictors; point model = posterior
// mean coefficient vector.
FittedModel fit_bayes_penalized(const DevelopmentSample& sample, const PriorSpec& prior,
                                const McmcConfig& mcmc, std::uint64_t rng_seed);

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 3;
  int mtry = 0;  // 0 = ceil(sqrt(P))
  int min_leaf = 1;
};

// Bootstrap-aggregated Gini trees on raw columns; leaves store the event
// proportion, forest prediction is the mean leaf probability.
FittedModel fit_random_forest(const DevelopmentSample& sample, const ForestConfig& config,
                              std::uint64_t rng_seed);

// Probabilities for every case-mix row, clamped to [1e-10, 1-1e-10].
// Columns are aligned by name against the model's training columns.
std::vector<double> predict_risks(const FittedModel& model, const CaseMix& casemix);

// Objective value and KKT residual of the penalised logistic problem at the
// model's coefficients; exposed for tests.
double penalized_objective(const FittedModel& model, const DevelopmentSample& sample,
                           PriorFamily family, double lambda);
double kkt_residual(const FittedModel& model, const DevelopmentSample& sample, PriorFamily family,
                    double lambda);

}  // namespace samplan
