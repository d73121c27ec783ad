#include "samplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "samplan/logistic.hpp"
#include "samplan/summation.hpp"

namespace samplan {

namespace {

constexpr double kProbClamp = 1e-10;

double clamp_prob(double p) { return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp); }

double logit(double p) { return std::log(p / (1.0 - p)); }

double null_loglik(std::span<const std::uint8_t> outcomes) {
  const double n = static_cast<double>(outcomes.size());
  double events = 0.0;
  for (auto y : outcomes) events += y;
  double prev = clamp_prob(events / n);
  return events * std::log(prev) + (n - events) * std::log(1.0 - prev);
}

double risks_loglik(std::span<const double> risks, std::span<const std::uint8_t> outcomes) {
  std::vector<double> terms(risks.size());
  for (std::size_t i = 0; i < risks.size(); ++i) {
    double p = clamp_prob(risks[i]);
    terms[i] = outcomes[i] ? std::log(p) : std::log(1.0 - p);
  }
  return pairwise_sum(terms);
}

void require_both_classes(std::span<const std::uint8_t> outcomes, const char* what) {
  bool any0 = false, any1 = false;
  for (auto y : outcomes) {
    if (y)
      any1 = true;
    else
      any0 = true;
    if (any0 && any1) return;
  }
  throw DegenerateError(std::string(what) + ": outcomes contain a single class");
}

}  // namespace

double c_statistic(std::span<const double> risks, std::span<const std::uint8_t> outcomes) {
  if (risks.size() != outcomes.size()) throw AlignmentError("c_statistic: length mismatch");
  require_both_classes(outcomes, "undefined concordance");

  // Mann-Whitney with midranks; ties contribute 1/2 exactly.
  const std::size_t n = risks.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return risks[a] < risks[b]; });

  double n1 = 0.0;
  for (auto y : outcomes) n1 += y;
  const double n0 = static_cast<double>(n) - n1;

  double rank_sum_events = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && risks[order[j]] == risks[order[i]]) ++j;
    // Midrank of the tie run [i, j), 1-based ranks.
    double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (outcomes[order[k]]) rank_sum_events += midrank;
    i = j;
  }
  double u = rank_sum_events - n1 * (n1 + 1.0) / 2.0;
  return u / (n1 * n0);
}

CalibrationFit calibration_fit(std::span<const double> risks,
                               std::span<const std::uint8_t> outcomes) {
  if (risks.size() != outcomes.size()) throw AlignmentError("calibration_fit: length mismatch");
  require_both_classes(outcomes, "calibration_fit");

  const auto n = static_cast<Eigen::Index>(risks.size());
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    double l = logit(clamp_prob(risks[static_cast<std::size_t>(i)]));
    X(i, 0) = l;
    y[i] = outcomes[static_cast<std::size_t>(i)];
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  if (hi - lo < 1e-12) throw DegenerateError("degenerate recalibration: constant risks");

  auto fit = fit_logistic_irls(X, y, nullptr, 100, 1e-8 * static_cast<double>(n));
  if (!fit.converged && !fit.coef.allFinite())
    throw ConvergenceError("calibration_fit: IRLS failed (max score " +
                           std::to_string(fit.max_score) + ")");
  return CalibrationFit{fit.coef[0], fit.coef[1]};
}

namespace {

// Natural cubic spline basis of x for interior behaviour linear beyond the
// boundary knots; returns K-1 columns (linear term + K-2 curvature terms).
Eigen::MatrixXd natural_spline_basis(const Eigen::VectorXd& x, const std::vector<double>& knots) {
  const auto K = static_cast<Eigen::Index>(knots.size());
  Eigen::MatrixXd B(x.size(), K - 1);
  B.col(0) = x;
  auto cube_pos = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  const double kK = knots.back();
  const double kKm1 = knots[static_cast<std::size_t>(K - 2)];
  for (Eigen::Index j = 0; j + 2 < K; ++j) {
    double kj = knots[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double dj = (cube_pos(x[i] - kj) - cube_pos(x[i] - kK)) / (kK - kj);
      double dK = (cube_pos(x[i] - kKm1) - cube_pos(x[i] - kK)) / (kK - kKm1);
      B(i, j + 1) = dj - dK;
    }
  }
  return B;
}

}  // namespace

CalibrationCurve calibration_curve(std::span<const double> risks,
                                   std::span<const std::uint8_t> outcomes, int n_knots) {
  if (risks.size() != outcomes.size()) throw AlignmentError("calibration_curve: length mismatch");
  require_both_classes(outcomes, "calibration_curve");
  if (n_knots < 2) throw ConfigError("calibration_curve: need at least 2 knots");

  std::vector<double> l(risks.size());
  for (std::size_t i = 0; i < risks.size(); ++i) l[i] = logit(clamp_prob(risks[i]));
  std::vector<double> sorted = l;
  std::sort(sorted.begin(), sorted.end());

  // Knots at the {5,35,65,95}% quantiles for the default 4; evenly spread in
  // probability for other counts.
  std::vector<double> knots;
  for (int k = 0; k < n_knots; ++k) {
    double q = n_knots == 4 ? std::array<double, 4>{0.05, 0.35, 0.65, 0.95}[static_cast<std::size_t>(k)]
                            : 0.05 + 0.9 * static_cast<double>(k) / (n_knots - 1);
    knots.push_back(percentile_sorted(sorted, q));
  }
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  if (knots.size() < 2) throw DegenerateError("degenerate recalibration: constant risks");

  const auto n = static_cast<Eigen::Index>(risks.size());
  Eigen::VectorXd lx(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lx[i] = l[static_cast<std::size_t>(i)];
    y[i] = outcomes[static_cast<std::size_t>(i)];
  }
  Eigen::MatrixXd B = natural_spline_basis(lx, knots);
  auto fit = fit_logistic_irls(B, y, nullptr, 100, 1e-8 * static_cast<double>(n));
  if (!fit.coef.allFinite())
    throw ConvergenceError("calibration_curve: spline fit failed");

  CalibrationCurve curve;
  curve.knots = knots;
  double p_lo = percentile_sorted(sorted, 0.01);
  double p_hi = percentile_sorted(sorted, 0.99);
  if (p_hi - p_lo < 1e-12) throw DegenerateError("degenerate recalibration: constant risks");
  const int grid_points = 100;
  Eigen::VectorXd gx(grid_points);
  for (int g = 0; g < grid_points; ++g)
    gx[g] = p_lo + (p_hi - p_lo) * static_cast<double>(g) / (grid_points - 1);
  Eigen::MatrixXd Bg = natural_spline_basis(gx, knots);
  Eigen::VectorXd eta = Bg * fit.coef.tail(Bg.cols());
  for (int g = 0; g < grid_points; ++g) {
    double risk = 1.0 / (1.0 + std::exp(-gx[g]));
    curve.grid.push_back(clamp_prob(risk));
    curve.observed.push_back(clamp_prob(1.0 / (1.0 + std::exp(-(fit.coef[0] + eta[g])))));
  }
  return curve;
}

PredictionError prediction_error(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size()) throw AlignmentError("prediction_error: length mismatch");
  std::vector<double> abs_err(est.size()), sq_err(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    double d = est[i] - truth[i];
    abs_err[i] = std::abs(d);
    sq_err[i] = d * d;
  }
  return PredictionError{mean(abs_err), std::sqrt(mean(sq_err))};
}

R2Measures r2_measures(std::span<const double> risks, std::span<const std::uint8_t> outcomes) {
  require_both_classes(outcomes, "r2_measures");
  const double n = static_cast<double>(outcomes.size());
  double ll_model = risks_loglik(risks, outcomes);
  double ll_null = null_loglik(outcomes);
  double cs = 1.0 - std::exp(-(2.0 / n) * (ll_model - ll_null));
  double cs_max = 1.0 - std::exp((2.0 / n) * ll_null);
  return R2Measures{cs, cs / cs_max};
}

double net_benefit(std::span<const double> risks, std::span<const std::uint8_t> outcomes,
                   double threshold) {
  if (risks.size() != outcomes.size()) throw AlignmentError("net_benefit: length mismatch");
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    if (risks[i] >= threshold) {
      if (outcomes[i])
        tp += 1.0;
      else
        fp += 1.0;
    }
  }
  double odds = threshold / (1.0 - threshold);
  return (tp - fp * odds) / static_cast<double>(risks.size());
}

double net_benefit_treat_all(double prevalence, double threshold) {
  return prevalence - (1.0 - prevalence) * threshold / (1.0 - threshold);
}

UtilityDraw value_of_information(const VoiInputs& in) {
  UtilityDraw u;
  u.nb_model = net_benefit(in.model_risks, in.outcomes, in.threshold);
  u.nb_max = net_benefit(in.true_risks, in.outcomes, in.threshold);
  double pop_prev = 0.0;
  for (auto y : in.outcomes) pop_prev += y;
  pop_prev /= static_cast<double>(in.outcomes.size());
  u.nb_treat_all = net_benefit_treat_all(pop_prev, in.threshold);
  u.nb_treat_none = 0.0;

  // Winner chosen on observed development-sample net benefit.
  double dev_prev = 0.0;
  for (auto y : in.dev_outcomes) dev_prev += y;
  dev_prev /= static_cast<double>(in.dev_outcomes.size());
  double dev_nb_model = net_benefit(in.dev_model_risks, in.dev_outcomes, in.threshold);
  double dev_nb_all = net_benefit_treat_all(dev_prev, in.threshold);
  double dev_nb_none = 0.0;

  double best = dev_nb_model;
  u.winner = static_cast<int>(WinnerKind::model);
  if (dev_nb_all > best) {
    best = dev_nb_all;
    u.winner = static_cast<int>(WinnerKind::treat_all);
  }
  if (dev_nb_none > best) {
    u.winner = static_cast<int>(WinnerKind::treat_none);
  }

  double nb_winner = u.winner == static_cast<int>(WinnerKind::model)     ? u.nb_model
                     : u.winner == static_cast<int>(WinnerKind::treat_all) ? u.nb_treat_all
                                                                           : 0.0;
  if (u.nb_max > 0.0) {
    u.rvsi_model = 100.0 * u.nb_model / u.nb_max;
    u.rvsi_winner = 100.0 * nb_winner / u.nb_max;
  } else {
    u.rvsi_model = std::nan("");
    u.rvsi_winner = std::nan("");
  }
  return u;
}

std::vector<double> misclassification_prob(const std::vector<std::vector<double>>& per_draw_risks,
                                           std::span<const double> true_risks, double threshold) {
  if (per_draw_risks.empty()) throw ConfigError("misclassification_prob: need >= 1 draw");
  const std::size_t n = true_risks.size();
  std::vector<double> prob(n, 0.0);
  for (const auto& draw : per_draw_risks) {
    if (draw.size() != n) throw AlignmentError("misclassification_prob: draw length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      bool opposite = (draw[i] > threshold && true_risks[i] < threshold) ||
                      (draw[i] < threshold && true_risks[i] > threshold);
      if (opposite) prob[i] += 1.0;
    }
  }
  for (auto& p : prob) p /= static_cast<double>(per_draw_risks.size());
  return prob;
}

std::vector<double> interval_widths(const std::vector<std::vector<double>>& per_draw_risks,
                                    Warnings* warnings) {
  if (per_draw_risks.empty()) return {};
  const std::size_t draws = per_draw_risks.size();
  const std::size_t n = per_draw_risks.front().size();
  if (draws < 40 && warnings)
    warnings->push_back("interval_widths: only " + std::to_string(draws) +
                        " draws; at least 40 recommended");
  std::vector<double> widths(n);
  std::vector<double> column(draws);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < draws; ++d) column[d] = per_draw_risks[d][i];
    std::sort(column.begin(), column.end());
    widths[i] = percentile_sorted(column, 0.975) - percentile_sorted(column, 0.025);
  }
  return widths;
}

MetricValues evaluate_model(const EvaluationInputs& in) {
  MetricValues m;
  const double nan = std::nan("");

  try {
    m.c_stat = c_statistic(in.model_risks, in.outcomes);
    m.c_degradation = m.c_stat - in.reference_cstat;
  } catch (const DegenerateError&) {
    m.c_stat = nan;
    m.c_degradation = nan;
  }

  try {
    auto cal = calibration_fit(in.model_risks, in.outcomes);
    m.cal_intercept = cal.intercept;
    m.cal_slope = cal.slope;
  } catch (const DegenerateError&) {
    m.cal_intercept = nan;
    m.cal_slope = nan;
  } catch (const ConvergenceError&) {
    m.cal_intercept = nan;
    m.cal_slope = nan;
  }

  auto pe = prediction_error(in.model_risks, in.true_risks);
  m.mape = pe.mape;
  m.rmspe = pe.rmspe;

  try {
    auto r2 = r2_measures(in.model_risks, in.outcomes);
    m.r2_cox_snell = r2.cox_snell;
    m.r2_nagelkerke = r2.nagelkerke;
  } catch (const DegenerateError&) {
    m.r2_cox_snell = nan;
    m.r2_nagelkerke = nan;
  }

  for (double t : in.thresholds) {
    VoiInputs voi{in.model_risks, in.true_risks, in.outcomes,
                  in.dev_model_risks, in.dev_outcomes, t};
    m.utility.push_back(value_of_information(voi));
  }
  return m;
}

std::map<std::string, MetricValues> subgroup_report(const EvaluationInputs& in,
                                                    std::span<const std::string> labels,
                                                    std::span<const std::string> dev_labels) {
  if (labels.size() != in.model_risks.size())
    throw AlignmentError("subgroup_report: label count mismatch");
  std::map<std::string, std::vector<std::size_t>> pop_idx;
  for (std::size_t i = 0; i < labels.size(); ++i) pop_idx[labels[i]].push_back(i);
  std::map<std::string, std::vector<std::size_t>> dev_idx;
  for (std::size_t i = 0; i < dev_labels.size(); ++i) dev_idx[dev_labels[i]].push_back(i);

  std::map<std::string, MetricValues> out;
  for (const auto& [label, idx] : pop_idx) {
    if (idx.size() < 2) continue;
    std::vector<double> risks, truths, dev_risks;
    std::vector<std::uint8_t> y, dev_y;
    risks.reserve(idx.size());
    for (auto i : idx) {
      risks.push_back(in.model_risks[i]);
      truths.push_back(in.true_risks[i]);
      y.push_back(in.outcomes[i]);
    }
    auto dit = dev_idx.find(label);
    if (dit != dev_idx.end())
      for (auto i : dit->second) {
        dev_risks.push_back(in.dev_model_risks[i]);
        dev_y.push_back(in.dev_outcomes[i]);
      }

    double ref_c;
    try {
      ref_c = c_statistic(truths, y);
    } catch (const DegenerateError&) {
      ref_c = std::nan("");
    }

    EvaluationInputs sub = in;
    sub.model_risks = risks;
    sub.true_risks = truths;
    sub.outcomes = y;
    sub.reference_cstat = ref_c;
    sub.dev_model_risks = dev_risks;
    sub.dev_outcomes = dev_y;
    if (dev_y.empty()) sub.thresholds = {};  // utilities undefined without a dev block
    out[label] = evaluate_model(sub);
    // Pad utilities with NaN rows when they could not be computed.
    if (dev_y.empty())
      for (std::size_t t = 0; t < in.thresholds.size(); ++t) {
        UtilityDraw u;
        u.nb_model = u.nb_max = u.nb_treat_all = u.rvsi_model = u.rvsi_winner = std::nan("");
        u.winner = -1;
        out[label].utility.push_back(u);
      }
  }
  return out;
}

}  // namespace samplan
