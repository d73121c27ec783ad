#include "samplan/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "samplan/metrics.hpp"
#include "samplan/rng.hpp"
#include "samplan/summation.hpp"

namespace samplan {

namespace {

constexpr double kRiskFloor = 1e-15;

double logistic(double x) {
  double p = 1.0 / (1.0 + std::exp(-x));
  return std::min(std::max(p, kRiskFloor), 1.0 - kRiskFloor);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

// One outcome realisation pinned for the whole calibration; makes the
// bisection objective deterministic.
constexpr std::uint64_t kCalibrationSeed = 0xCA11B7A7E5EEDull;

}  // namespace

std::vector<double> ReferenceModel::effective_coefficients() const {
  std::vector<double> out;
  out.reserve(weights.size() + 1);
  out.push_back(alpha);
  for (double w : weights) out.push_back(delta * w);
  return out;
}

ReferenceModel ReferenceModel::aligned_to(const CaseMix& casemix) const {
  ReferenceModel out = *this;
  out.weights.assign(static_cast<std::size_t>(casemix.n_cols()), 0.0);
  out.column_names.clear();
  for (const auto& c : casemix.columns) out.column_names.push_back(c.name);
  for (std::size_t j = 0; j < column_names.size(); ++j) {
    int idx = casemix.column_index(column_names[j]);
    if (idx < 0)
      throw AlignmentError("reference model column '" + column_names[j] +
                           "' not present in case-mix");
    out.weights[static_cast<std::size_t>(idx)] = weights[j];
  }
  return out;
}

double TargetPopulation::prevalence() const {
  if (outcome.empty()) return std::nan("");
  std::int64_t events = std::accumulate(outcome.begin(), outcome.end(), std::int64_t{0});
  return static_cast<double>(events) / static_cast<double>(outcome.size());
}

double DevelopmentSample::prevalence() const {
  if (outcome.empty()) return std::nan("");
  return static_cast<double>(events()) / static_cast<double>(outcome.size());
}

std::int64_t DevelopmentSample::events() const {
  return std::accumulate(outcome.begin(), outcome.end(), std::int64_t{0});
}

std::vector<double> weighted_scores(const std::vector<double>& weights, const CaseMix& casemix) {
  if (static_cast<Eigen::Index>(weights.size()) != casemix.n_cols())
    throw AlignmentError("weight vector length " + std::to_string(weights.size()) +
                         " does not match case-mix column count " +
                         std::to_string(casemix.n_cols()));
  const std::int64_t n = casemix.n_rows();
  const Eigen::Index P = casemix.n_cols();
  std::vector<double> s(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < P; ++j) acc += weights[static_cast<std::size_t>(j)] * casemix.rows(i, j);
    s[static_cast<std::size_t>(i)] = acc;
  }
  return s;
}

std::vector<double> reference_risks(const ReferenceModel& model, const CaseMix& casemix) {
  if (model.column_names.size() != static_cast<std::size_t>(casemix.n_cols()))
    throw AlignmentError("reference model has " + std::to_string(model.column_names.size()) +
                         " columns, case-mix has " + std::to_string(casemix.n_cols()));
  for (std::size_t j = 0; j < model.column_names.size(); ++j)
    if (model.column_names[j] != casemix.columns[j].name)
      throw AlignmentError("column mismatch at position " + std::to_string(j) + ": model '" +
                           model.column_names[j] + "' vs case-mix '" + casemix.columns[j].name +
                           "'");
  auto s = weighted_scores(model.weights, casemix);
  const std::int64_t n = casemix.n_rows();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    auto& v = s[static_cast<std::size_t>(i)];
    v = logistic(model.alpha + model.delta * v);
  }
  return s;
}

std::vector<std::uint8_t> sample_outcomes(const std::vector<double>& risks, std::uint64_t rng_seed) {
  auto stream = make_stream(rng_seed, 0, Role::outcomes);
  const std::int64_t n = static_cast<std::int64_t>(risks.size());
  std::vector<std::uint8_t> y(risks.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] =
        stream.uniform_at(static_cast<std::uint64_t>(i)) < risks[static_cast<std::size_t>(i)] ? 1 : 0;
  return y;
}

namespace {

// Mean risk over cached scores for trial (alpha, delta).
double mean_risk(const std::vector<double>& scores, double alpha, double delta) {
  const std::int64_t n = static_cast<std::int64_t>(scores.size());
  std::vector<double> p(scores.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    p[static_cast<std::size_t>(i)] = logistic(alpha + delta * scores[static_cast<std::size_t>(i)]);
  return mean(p);
}

// Inner bisection: alpha matching the target prevalence for a fixed delta.
double solve_alpha(const std::vector<double>& scores, double delta, double target_prev, double tol,
                   int max_iter, int* iterations) {
  double lo = -50.0, hi = 50.0;
  double a = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    a = 0.5 * (lo + hi);
    double m = mean_risk(scores, a, delta);
    if (iterations) ++*iterations;
    if (std::abs(m - target_prev) <= tol) return a;
    if (m < target_prev)
      lo = a;
    else
      hi = a;
  }
  return a;
}

double cstat_at(const std::vector<double>& scores, double alpha, double delta) {
  const std::int64_t n = static_cast<std::int64_t>(scores.size());
  std::vector<double> p(scores.size());
  auto stream = make_stream(kCalibrationSeed, 0, Role::calibration);
  std::vector<std::uint8_t> y(scores.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    p[k] = logistic(alpha + delta * scores[k]);
    y[k] = stream.uniform_at(static_cast<std::uint64_t>(i)) < p[k] ? 1 : 0;
  }
  return c_statistic(p, y);
}

}  // namespace

ReferenceModel calibrate_reference(const std::vector<double>& relative_weights,
                                   const CaseMix& casemix, double target_cstat,
                                   double target_prevalence, double tol, int max_iter,
                                   CalibrationReport* report) {
  if (!(target_cstat > 0.5 && target_cstat < 1.0) && target_cstat != 0.5)
    throw ConfigError("target c-statistic must lie in [0.5, 1)");
  if (!(target_prevalence > 0.0 && target_prevalence < 1.0))
    throw ConfigError("target prevalence must lie in (0,1)");

  ReferenceModel model;
  model.weights = relative_weights;
  for (const auto& c : casemix.columns) model.column_names.push_back(c.name);
  if (model.weights.size() != model.column_names.size())
    throw AlignmentError("relative weight count does not match case-mix columns");

  CalibrationReport rep;
  const double inner_tol = std::min(tol, 0.005) * 0.5;

  // Zero-signal case is exact.
  if (target_cstat == 0.5) {
    model.delta = 0.0;
    model.alpha = logit(target_prevalence);
    rep.achieved_cstat = 0.5;
    rep.achieved_prevalence = target_prevalence;
    rep.converged = true;
    rep.alpha = model.alpha;
    if (report) *report = rep;
    return model;
  }

  bool all_zero = true;
  for (double w : relative_weights)
    if (w != 0.0) all_zero = false;
  if (all_zero) throw ConfigError("target c-statistic > 0.5 requires nonzero relative weights");

  auto scores = weighted_scores(relative_weights, casemix);

  auto eval = [&](double delta, double& alpha_out) {
    alpha_out = solve_alpha(scores, delta, target_prevalence, inner_tol, max_iter,
                            &rep.inner_iterations);
    ++rep.outer_iterations;
    return cstat_at(scores, alpha_out, delta);
  };

  // Bracket [0, 50], doubling expansion if the target sits above.
  double lo = 0.0, hi = 50.0;
  double alpha_hi = 0.0;
  double c_hi = eval(hi, alpha_hi);
  int expansions = 0;
  while (c_hi < target_cstat && expansions < 16) {
    lo = hi;
    hi *= 2.0;
    c_hi = eval(hi, alpha_hi);
    ++expansions;
  }
  if (c_hi < target_cstat)
    throw ConvergenceError("calibrate_reference: target c-statistic " +
                           std::to_string(target_cstat) + " unreachable (achieved " +
                           std::to_string(c_hi) + " at delta=" + std::to_string(hi) + ")");

  double delta = hi, alpha = alpha_hi, c = c_hi;
  for (int it = 0; it < max_iter; ++it) {
    delta = 0.5 * (lo + hi);
    c = eval(delta, alpha);
    if (std::abs(c - target_cstat) <= tol) break;
    if (c < target_cstat)
      lo = delta;
    else
      hi = delta;
  }

  double prev = mean_risk(scores, alpha, delta);
  rep.achieved_cstat = c;
  rep.achieved_prevalence = prev;
  rep.delta = delta;
  rep.alpha = alpha;
  rep.converged = std::abs(c - target_cstat) <= tol && std::abs(prev - target_prevalence) <= tol;
  if (report) *report = rep;
  if (!rep.converged)
    throw ConvergenceError("calibrate_reference: not converged after " + std::to_string(max_iter) +
                           " iterations (achieved c=" + std::to_string(c) +
                           ", prevalence=" + std::to_string(prev) + ")");

  model.delta = delta;
  model.alpha = alpha;
  return model;
}

TargetPopulation build_population(const ReferenceModel& model, const CaseMix& casemix,
                                  std::uint64_t rng_seed, Warnings* warnings) {
  TargetPopulation pop;
  pop.casemix = casemix;
  pop.true_risk = reference_risks(model, casemix);
  pop.outcome = sample_outcomes(pop.true_risk, rng_seed);
  if (casemix.n_rows() < 100000 && warnings)
    warnings->push_back("target population has " + std::to_string(casemix.n_rows()) +
                        " rows; at least 100000 recommended");
  return pop;
}

DevelopmentSample draw_sample(const CaseMix& source, const ReferenceModel& model, std::int64_t n,
                              std::uint64_t rng_seed) {
  if (n < 2) throw ConfigError("draw_sample: n must be >= 2");
  if (n > source.n_rows())
    throw ConfigError("draw_sample: n=" + std::to_string(n) + " exceeds source rows " +
                      std::to_string(source.n_rows()));

  // Partial Fisher-Yates over the row index range.
  auto stream = make_stream(rng_seed, 0, Role::sample);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(source.n_rows()));
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  for (std::int64_t i = 0; i < n; ++i) {
    auto j = i + static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(source.n_rows() - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(n));

  DevelopmentSample sample;
  sample.casemix = source.take_rows(idx);
  sample.seed_id = rng_seed;
  auto risks = reference_risks(model, sample.casemix);
  sample.outcome = sample_outcomes(risks, rng_seed);
  auto events = sample.events();
  sample.degenerate = events == 0 || events == n;
  return sample;
}

}  // namespace samplan
