#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "samplan/common.hpp"
#include "samplan/rng.hpp"

namespace samplan {

enum class PriorFamily { ridge, lasso };

// Shrinkage prior: ridge slopes ~ N(0, lambda2) with lambda2 ~
// inverse-gamma(0.01, 0.01); lasso slopes ~ Laplace(0, sqrt(1/lambda2)) with
// lambda2 ~ gamma(1, rate 1/1.78). Intercept ~ N(0, intercept_variance).
struct PriorSpec {
  PriorFamily family = PriorFamily::ridge;
  double intercept_variance = 1e6;
  // Test hook: pins lambda2 instead of sampling it.
  std::optional<double> fixed_lambda2;
  // Near-flat slope prior for posterior-vs-MLE checks (ridge only).
  std::optional<double> flat_slope_variance;
};

struct ProposalConfig {
  double initial_step = 0.1;
  int adapt_window = 50;
  double target_acceptance = 0.30;
};

struct McmcConfig {
  int burn_in = 5000;
  int thin = 10;
  int draws = 1000;
  ProposalConfig proposal;

  void validate() const {
    if (burn_in < 0) throw ConfigError("mcmc: burn_in must be >= 0");
    if (thin < 1) throw ConfigError("mcmc: thin must be >= 1");
    if (draws < 1) throw ConfigError("mcmc: draws must be >= 1");
  }
};

struct McmcResult {
  // Retained draws, one row per kept sample; columns = parameters
  // (coefficients first, log lambda2 last when sampled).
  std::vector<std::vector<double>> samples;
  double acceptance = 0.0;  // post-burn-in mean across components
  bool low_acceptance = false;
  bool split_chain_flag = false;  // halves differ by > 4 MC-SE for some coef
};

// Componentwise adaptive random-walk Metropolis-Hastings over a generic
// log-target. Step scales adapt toward the target acceptance during burn-in
// and freeze afterwards.
McmcResult run_metropolis(const std::function<double(const std::vector<double>&)>& log_target,
                          std::vector<double> init, const McmcConfig& config,
                          std::uint64_t rng_seed, int n_coef_for_diag);

// Prior log-densities used by both the exact-likelihood and one-sample paths.
// `coef` is (intercept, slopes...); lambda2 on its natural scale.
double log_prior_coefficients(const std::vector<double>& coef, double lambda2,
                              const PriorSpec& prior);
double log_hyperprior_lambda2(double lambda2, const PriorSpec& prior);

}  // namespace samplan
