#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "samplan/casemix.hpp"
#include "samplan/common.hpp"

namespace samplan {

// Working "truth": logit(p_i) = alpha + delta * sum_j weights_j * x_ji.
// Columns absent from the truth (noise predictors) carry weight exactly 0.
struct ReferenceModel {
  double alpha = 0.0;
  double delta = 0.0;  // >= 0
  std::vector<double> weights;
  std::vector<std::string> column_names;

  // (alpha, delta*weights) as one coefficient vector, intercept first.
  std::vector<double> effective_coefficients() const;

  // Extends the weight vector with zeros for columns the truth does not use.
  ReferenceModel aligned_to(const CaseMix& casemix) const;
};

struct CalibrationReport {
  double achieved_cstat = 0.0;
  double achieved_prevalence = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double delta = 0.0;
  double alpha = 0.0;
  bool converged = false;
};

struct TargetPopulation {
  CaseMix casemix;
  std::vector<double> true_risk;  // p_i in (0,1)
  std::vector<std::uint8_t> outcome;

  std::int64_t size() const { return static_cast<std::int64_t>(true_risk.size()); }
  double prevalence() const;
};

struct DevelopmentSample {
  CaseMix casemix;
  std::vector<std::uint8_t> outcome;
  std::uint64_t seed_id = 0;
  bool degenerate = false;  // zero events or zero non-events

  std::int64_t size() const { return static_cast<std::int64_t>(outcome.size()); }
  double prevalence() const;
  std::int64_t events() const;
};

// p_i = logistic(alpha + delta * w'x_i) per row, clamped inside (0,1).
std::vector<double> reference_risks(const ReferenceModel& model, const CaseMix& casemix);

// Linear predictor without alpha/delta: s_i = w'x_i. Shared by calibration.
std::vector<double> weighted_scores(const std::vector<double>& weights, const CaseMix& casemix);

// y_i ~ Bernoulli(p_i), row-indexed draws (order-independent, reproducible).
std::vector<std::uint8_t> sample_outcomes(const std::vector<double>& risks, std::uint64_t rng_seed);

// Austin-style nested bisection: outer loop on delta targets the rank
// c-statistic of one fixed-seed outcome realisation, inner loop on alpha
// targets mean true risk. Throws ConvergenceError when a target cannot be
// reached.
ReferenceModel calibrate_reference(const std::vector<double>& relative_weights,
                                   const CaseMix& casemix, double target_cstat,
                                   double target_prevalence, double tol = 0.005,
                                   int max_iter = 60, CalibrationReport* report = nullptr);

TargetPopulation build_population(const ReferenceModel& model, const CaseMix& casemix,
                                  std::uint64_t rng_seed, Warnings* warnings = nullptr);

// n rows without replacement from `source`, outcomes freshly generated from
// `model`. Degenerate samples are returned flagged, not rejected.
DevelopmentSample draw_sample(const CaseMix& source, const ReferenceModel& model, std::int64_t n,
                              std::uint64_t rng_seed);

}  // namespace samplan
