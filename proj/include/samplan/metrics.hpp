#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "samplan/common.hpp"
#include "samplan/population.hpp"

namespace samplan {

// Treatment options compared by net benefit in the development sample.
enum class WinnerKind : int { model = 0, treat_all = 1, treat_none = 2 };

// One threshold's clinical-utility block.
struct UtilityDraw {
  double nb_model = 0.0;
  double nb_max = 0.0;
  double nb_treat_all = 0.0;
  double nb_treat_none = 0.0;  // identically 0
  double rvsi_model = 0.0;     // 100 * nb_model / nb_max; NaN when nb_max <= 0
  double rvsi_winner = 0.0;
  int winner = 0;              // WinnerKind
};

// All scalar performance/degradation statistics of one fitted model against
// one target population. NaN marks a metric that was undefined for this draw
// (degenerate recalibration, single-class subgroup, ...).
struct MetricValues {
  double c_stat = 0.0;
  double c_degradation = 0.0;
  double cal_slope = 0.0;
  double cal_intercept = 0.0;
  double mape = 0.0;
  double rmspe = 0.0;
  double r2_cox_snell = 0.0;
  double r2_nagelkerke = 0.0;
  std::vector<UtilityDraw> utility;  // parallel to the configured thresholds
};

struct MetricDraw {
  MetricValues overall;
  std::map<std::string, MetricValues> subgroups;
};

struct CalibrationCurve {
  std::vector<double> grid;      // estimated-risk points, strictly increasing
  std::vector<double> observed;  // curve values in (0,1)
  std::vector<double> knots;     // logit-scale knot locations
};

// Tie-aware rank concordance in O(n log n); ties contribute 1/2. Equals the
// all-pairs definition exactly. Throws DegenerateError on single-class input.
double c_statistic(std::span<const double> risks, std::span<const std::uint8_t> outcomes);

// MLE of logit(p) = a + b*logit(p_hat). Throws DegenerateError on constant
// risks or single-class outcomes, ConvergenceError otherwise on failure.
struct CalibrationFit {
  double intercept = 0.0;
  double slope = 0.0;
};
CalibrationFit calibration_fit(std::span<const double> risks, std::span<const std::uint8_t> outcomes);

// Logistic regression of outcome on a natural cubic spline basis of
// logit(p_hat), knots at the {5,35,65,95}% quantiles, evaluated on a
// 100-point grid spanning the 1st-99th risk percentiles.
CalibrationCurve calibration_curve(std::span<const double> risks,
                                   std::span<const std::uint8_t> outcomes, int n_knots = 4);

struct PredictionError {
  double mape = 0.0;
  double rmspe = 0.0;
};
PredictionError prediction_error(std::span<const double> est, std::span<const double> truth);

struct R2Measures {
  double cox_snell = 0.0;
  double nagelkerke = 0.0;
};
R2Measures r2_measures(std::span<const double> risks, std::span<const std::uint8_t> outcomes);

// NB = (TP - FP * t/(1-t)) / n, treating rows with risk >= t.
double net_benefit(std::span<const double> risks, std::span<const std::uint8_t> outcomes,
                   double threshold);
double net_benefit_treat_all(double prevalence, double threshold);

struct VoiInputs {
  std::span<const double> model_risks;          // over the target population
  std::span<const double> true_risks;           // idem
  std::span<const std::uint8_t> outcomes;       // idem
  std::span<const double> dev_model_risks;      // over the development sample
  std::span<const std::uint8_t> dev_outcomes;   // idem
  double threshold = 0.5;
};
UtilityDraw value_of_information(const VoiInputs& in);

// Fraction of draws landing on the opposite side of the threshold from the
// true risk; exact threshold hits count as not misclassified.
std::vector<double> misclassification_prob(const std::vector<std::vector<double>>& per_draw_risks,
                                           std::span<const double> true_risks, double threshold);

// Per-individual (97.5th - 2.5th) percentile width, type-7 interpolation.
// per_draw_risks: draws x individuals.
std::vector<double> interval_widths(const std::vector<std::vector<double>>& per_draw_risks,
                                    Warnings* warnings = nullptr);

// Inputs for one full evaluation of a fitted model against a population.
struct EvaluationInputs {
  std::span<const double> model_risks;
  std::span<const double> true_risks;
  std::span<const std::uint8_t> outcomes;
  double reference_cstat = 0.0;
  std::span<const double> dev_model_risks;
  std::span<const std::uint8_t> dev_outcomes;
  std::span<const double> thresholds;
};

// Computes every MetricValues field; undefined metrics come back NaN.
MetricValues evaluate_model(const EvaluationInputs& in);

// Every metric recomputed within each subgroup partition. `labels` holds one
// label per population row; dev_labels one per development-sample row.
std::map<std::string, MetricValues> subgroup_report(const EvaluationInputs& in,
                                                    std::span<const std::string> labels,
                                                    std::span<const std::string> dev_labels);

}  // namespace samplan
