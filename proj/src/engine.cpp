#include "samplan/engine.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "samplan/rng.hpp"
#include "samplan/summation.hpp"

namespace samplan {

namespace {

std::string format_double(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

bool is_missing(double v) { return std::isnan(v); }

std::string threshold_suffix(double t) { return "@" + format_double(t); }

}  // namespace

std::string Criterion::id() const {
  std::string lo = std::isinf(lower) ? "-inf" : format_double(lower);
  std::string hi = std::isinf(upper) ? "inf" : format_double(upper);
  return metric + " in [" + lo + "," + hi + "]";
}

void ScenarioConfig::validate(Warnings* warnings) const {
  if (n_values.empty()) throw ConfigError("scenario: n_values must not be empty");
  for (auto n : n_values)
    if (n < 2) throw ConfigError("scenario: every n must be >= 2");
  if (iterations < 1) throw ConfigError("scenario: iterations must be >= 1");
  if (iterations < 1000 && warnings)
    warnings->push_back("iterations=" + std::to_string(iterations) +
                        " below the recommended 1000");
  if (strategies.empty()) throw ConfigError("scenario: at least one strategy required");
  if (thresholds.empty()) throw ConfigError("scenario: at least one threshold required");
  for (double t : thresholds)
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("scenario: thresholds must lie in (0,1)");
  if (reference_models.empty()) throw ConfigError("scenario: reference model missing");
  if (reference_models.size() != model_probs.size())
    throw ConfigError("scenario: mixture models and probabilities differ in length");
  double sum = 0.0;
  for (double p : model_probs) {
    if (p < 0.0) throw ConfigError("scenario: mixture probabilities must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("scenario: mixture probabilities sum to " + std::to_string(sum));
  for (const auto& c : criteria) {
    if (c.lower > c.upper) throw ConfigError("criterion " + c.metric + ": lower > upper");
    if (!(c.target_prob > 0.0 && c.target_prob <= 1.0))
      throw ConfigError("criterion " + c.metric + ": target probability must lie in (0,1]");
  }
  std::vector<std::string> labels;
  for (const auto& s : strategies) labels.push_back(s.label);
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
    throw ConfigError("scenario: strategy labels must be unique");
}

namespace {

// Fits one strategy on a development sample; shared by full-path iterations.
FittedModel fit_strategy(const StrategyConfig& s, const DevelopmentSample& sample,
                         std::uint64_t fit_seed) {
  switch (s.kind) {
    case ModelKind::mle:
      return fit_mle_logistic(sample, s.mle_max_iter, s.mle_tol);
    case ModelKind::shrunk: {
      auto mle = fit_mle_logistic(sample, s.mle_max_iter, s.mle_tol);
      return shrink_uniform(mle, sample);
    }
    case ModelKind::ridge_cv:
      return fit_penalized_cv(sample, PriorFamily::ridge, s.penalized, fit_seed);
    case ModelKind::lasso_cv:
      return fit_penalized_cv(sample, PriorFamily::lasso, s.penalized, fit_seed);
    case ModelKind::bayes_ridge: {
      PriorSpec prior = s.prior;
      prior.family = PriorFamily::ridge;
      return fit_bayes_penalized(sample, prior, s.mcmc, fit_seed);
    }
    case ModelKind::bayes_lasso: {
      PriorSpec prior = s.prior;
      prior.family = PriorFamily::lasso;
      return fit_bayes_penalized(sample, prior, s.mcmc, fit_seed);
    }
    case ModelKind::forest:
      return fit_random_forest(sample, s.forest, fit_seed);
  }
  throw ConfigError("unknown strategy kind");
}

MetricValues missing_metric_values(std::size_t n_thresholds) {
  MetricValues m;
  const double nan = std::nan("");
  m.c_stat = m.c_degradation = m.cal_slope = m.cal_intercept = nan;
  m.mape = m.rmspe = m.r2_cox_snell = m.r2_nagelkerke = nan;
  for (std::size_t t = 0; t < n_thresholds; ++t) {
    UtilityDraw u;
    u.nb_model = u.nb_max = u.nb_treat_all = u.rvsi_model = u.rvsi_winner = nan;
    u.nb_treat_none = nan;
    u.winner = -1;
    m.utility.push_back(u);
  }
  return m;
}

std::vector<std::string> subgroup_labels(const CaseMix& casemix) {
  std::vector<std::string> labels;
  if (!casemix.subgroup) return labels;
  int col = casemix.column_index(*casemix.subgroup);
  labels.reserve(static_cast<std::size_t>(casemix.n_rows()));
  for (Eigen::Index i = 0; i < casemix.n_rows(); ++i)
    labels.push_back(format_double(casemix.rows(i, col)));
  return labels;
}

}  // namespace

std::pair<CaseMix, CaseMix> split_casemix(const CaseMix& master, std::int64_t population_size,
                                          std::uint64_t master_seed) {
  const std::int64_t total_rows = master.n_rows();
  if (population_size >= total_rows)
    throw ConfigError("population_size " + std::to_string(population_size) +
                      " leaves no development pool in " + std::to_string(total_rows) + " rows");
  std::vector<std::int64_t> perm(static_cast<std::size_t>(total_rows));
  std::iota(perm.begin(), perm.end(), std::int64_t{0});
  auto stream = make_stream(master_seed, 0, Role::split);
  for (std::int64_t i = 0; i < population_size; ++i) {
    auto j = i + static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(total_rows - i)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<std::int64_t> pop_rows(perm.begin(), perm.begin() + population_size);
  std::vector<std::int64_t> dev_rows(perm.begin() + population_size, perm.end());
  std::sort(pop_rows.begin(), pop_rows.end());
  std::sort(dev_rows.begin(), dev_rows.end());
  return {master.take_rows(pop_rows), master.take_rows(dev_rows)};
}

ScenarioResult run_scenario(const ScenarioConfig& config, const CaseMix& master_casemix) {
  auto t0 = std::chrono::steady_clock::now();
  ScenarioResult result;
  Warnings warnings;
  config.validate(&warnings);

  const std::int64_t n_dev = config.n_values.front();
  auto [pop_casemix, dev_pool] =
      split_casemix(master_casemix, config.population_size, config.master_seed);
  if (n_dev > dev_pool.n_rows())
    throw ConfigError("n=" + std::to_string(n_dev) + " exceeds the development pool (" +
                      std::to_string(dev_pool.n_rows()) + " rows)");

  // Per-model populations on the shared case-mix, cached eagerly.
  const std::size_t n_models = config.reference_models.size();
  std::vector<ReferenceModel> models;
  std::vector<TargetPopulation> populations;
  std::vector<double> ref_cstat(n_models);
  for (std::size_t m = 0; m < n_models; ++m) {
    models.push_back(config.reference_models[m].aligned_to(pop_casemix));
    populations.push_back(build_population(models[m], pop_casemix,
                                           mix_seed(config.master_seed, 0xB0B0 + m), &warnings));
    ref_cstat[m] = c_statistic(populations[m].true_risk, populations[m].outcome);
  }

  const int iterations = config.iterations;
  const std::size_t n_strategies = config.strategies.size();
  const std::size_t n_thresholds = config.thresholds.size();
  const auto tracked_count =
      static_cast<std::size_t>(std::min<std::int64_t>(config.instability_sample, config.population_size));

  MetricDraws draws;
  draws.n = n_dev;
  draws.thresholds = config.thresholds;
  for (const auto& s : config.strategies) draws.strategy_labels.push_back(s.label);
  draws.per_strategy.assign(n_strategies, std::vector<MetricDraw>(static_cast<std::size_t>(iterations)));
  draws.fit_failed.assign(n_strategies, std::vector<std::uint8_t>(static_cast<std::size_t>(iterations), 0));
  draws.fit_errors.assign(n_strategies, std::vector<std::string>(static_cast<std::size_t>(iterations)));
  draws.model_index.assign(static_cast<std::size_t>(iterations), 0);

  const bool track = config.emit_instability && tracked_count > 0;
  std::vector<std::vector<std::vector<double>>> tracked_risks;  // [strategy][iter][tracked]
  std::vector<std::vector<CalibrationCurve>> curves(n_strategies);
  std::vector<std::vector<int>> curve_ids(n_strategies);
  if (track) {
    tracked_risks.assign(
        n_strategies, std::vector<std::vector<double>>(static_cast<std::size_t>(iterations)));
    for (std::size_t s = 0; s < n_strategies; ++s) {
      curves[s].resize(static_cast<std::size_t>(std::min(config.curves_emitted, iterations)));
      curve_ids[s].resize(curves[s].size());
    }
  }

  auto pop_labels = subgroup_labels(pop_casemix);
  const bool do_subgroups = !pop_labels.empty();

  result.first_models.assign(n_strategies, std::nullopt);

  // Cumulative mixture probabilities for iteration model selection.
  std::vector<double> cum_probs(n_models);
  std::partial_sum(config.model_probs.begin(), config.model_probs.end(), cum_probs.begin());

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < iterations; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const std::uint64_t iter_key = mix_seed(config.master_seed, static_cast<std::uint64_t>(k) + 1);

    std::size_t m = 0;
    if (n_models > 1) {
      double u = make_stream(iter_key, 0, Role::model_select).uniform();
      while (m + 1 < n_models && u >= cum_probs[m]) ++m;
    }
    draws.model_index[ku] = static_cast<int>(m);
    const auto& pop = populations[m];

    DevelopmentSample sample = draw_sample(dev_pool, models[m], n_dev, iter_key);
    auto dev_labels = do_subgroups ? subgroup_labels(sample.casemix) : std::vector<std::string>{};

    for (std::size_t s = 0; s < n_strategies; ++s) {
      MetricDraw& slot = draws.per_strategy[s][ku];
      try {
        FittedModel model =
            fit_strategy(config.strategies[s], sample, mix_seed(iter_key, 1000 + s));
        if (k == 0) result.first_models[s] = model;
        auto pop_risks = predict_risks(model, pop.casemix);
        auto dev_risks = predict_risks(model, sample.casemix);

        EvaluationInputs in;
        in.model_risks = pop_risks;
        in.true_risks = pop.true_risk;
        in.outcomes = pop.outcome;
        in.reference_cstat = ref_cstat[m];
        in.dev_model_risks = dev_risks;
        in.dev_outcomes = sample.outcome;
        in.thresholds = config.thresholds;
        slot.overall = evaluate_model(in);
        if (do_subgroups) slot.subgroups = subgroup_report(in, pop_labels, dev_labels);

        if (track) {
          auto& t = tracked_risks[s][ku];
          t.resize(tracked_count);
          for (std::size_t i = 0; i < tracked_count; ++i) t[i] = pop_risks[i];
          if (k < static_cast<int>(curves[s].size())) {
            try {
              curves[s][ku] = calibration_curve(pop_risks, pop.outcome);
            } catch (const std::runtime_error&) {
              curves[s][ku] = CalibrationCurve{};  // degenerate draw, empty curve
            }
            curve_ids[s][ku] = k;
          }
        }
      } catch (const std::exception& e) {
        // Fit errors become missing draws; the scenario never aborts.
        slot.overall = missing_metric_values(n_thresholds);
        draws.fit_failed[s][ku] = 1;
        draws.fit_errors[s][ku] = e.what();
      }
      if (draws.fit_failed[s][ku] && track) {
        tracked_risks[s][ku].assign(tracked_count, std::nan(""));
        if (k < static_cast<int>(curves[s].size())) curve_ids[s][ku] = k;
      }
    }
  }

  // Instability assembly (deterministic, serial).
  InstabilityData inst;
  if (track) {
    inst.tracked_ids.resize(tracked_count);
    std::iota(inst.tracked_ids.begin(), inst.tracked_ids.end(), std::int64_t{0});
    for (std::size_t m = 0; m < n_models; ++m)
      inst.tracked_truths.emplace_back(populations[m].true_risk.begin(),
                                       populations[m].true_risk.begin() +
                                           static_cast<std::int64_t>(tracked_count));
    inst.draw_model_index = draws.model_index;
    for (std::size_t s = 0; s < n_strategies; ++s) {
      InstabilityData::PerStrategy ps;
      ps.strategy = config.strategies[s].label;
      ps.per_draw_risks = std::move(tracked_risks[s]);
      ps.curves = std::move(curves[s]);
      ps.curve_draw_ids = std::move(curve_ids[s]);

      // Drop failed draws from the per-individual summaries.
      std::vector<std::vector<double>> valid;
      std::vector<int> valid_model;
      for (std::size_t k = 0; k < ps.per_draw_risks.size(); ++k)
        if (!draws.fit_failed[s][k]) {
          valid.push_back(ps.per_draw_risks[k]);
          valid_model.push_back(draws.model_index[k]);
        }
      if (!valid.empty()) {
        ps.widths = interval_widths(valid, &warnings);
        for (double t : config.thresholds) {
          std::vector<double> mis(tracked_count, 0.0);
          for (std::size_t d = 0; d < valid.size(); ++d) {
            const auto& truth = inst.tracked_truths[static_cast<std::size_t>(valid_model[d])];
            for (std::size_t i = 0; i < tracked_count; ++i) {
              bool opposite = (valid[d][i] > t && truth[i] < t) || (valid[d][i] < t && truth[i] > t);
              if (opposite) mis[i] += 1.0;
            }
          }
          for (auto& v : mis) v /= static_cast<double>(valid.size());
          ps.misclass.push_back(std::move(mis));
        }
      }
      inst.strategies.push_back(std::move(ps));
    }
  }

  // Missing-rate warnings.
  for (std::size_t s = 0; s < n_strategies; ++s) {
    int failed = 0;
    for (auto f : draws.fit_failed[s]) failed += f;
    if (failed * 2 > iterations)
      warnings.push_back("strategy '" + config.strategies[s].label + "': " +
                         std::to_string(failed) + "/" + std::to_string(iterations) +
                         " draws missing");
  }

  result.draws = std::move(draws);
  result.instability = std::move(inst);
  result.summary = summarize(config, result.draws, track ? &result.instability : nullptr);
  result.summary.warnings.insert(result.summary.warnings.end(), warnings.begin(), warnings.end());
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace {

MetricSummary summarize_series(const std::vector<double>& values) {
  MetricSummary s;
  std::vector<double> present;
  present.reserve(values.size());
  for (double v : values)
    if (!is_missing(v)) present.push_back(v);
  s.n_missing = static_cast<int>(values.size() - present.size());
  s.n_used = static_cast<int>(present.size());
  if (present.empty()) return s;
  // Sorted before summing: the mean is then invariant under any permutation
  // of the iterations, not merely deterministic for one order.
  std::sort(present.begin(), present.end());
  s.mean = mean(present);
  s.p2_5 = percentile_sorted(present, 0.025);
  s.p97_5 = percentile_sorted(present, 0.975);
  return s;
}

double assurance_probability(const std::vector<double>& values, const Criterion& c) {
  int in_bounds = 0, used = 0;
  for (double v : values) {
    if (is_missing(v)) continue;
    ++used;
    if (v >= c.lower && v <= c.upper) ++in_bounds;
  }
  if (used == 0) return std::nan("");
  return static_cast<double>(in_bounds) / static_cast<double>(used);
}

// Extracts one named metric series across iterations for a subgroup ("overall"
// uses the top-level values). Threshold-qualified names index the utility row.
std::vector<double> metric_series(const MetricDraws& draws, std::size_t strategy,
                                  const std::string& subgroup, const std::string& name,
                                  std::size_t threshold_idx) {
  const auto& per_iter = draws.per_strategy[strategy];
  std::vector<double> out;
  out.reserve(per_iter.size());
  for (const auto& d : per_iter) {
    const MetricValues* v = &d.overall;
    if (subgroup != "overall") {
      auto it = d.subgroups.find(subgroup);
      if (it == d.subgroups.end()) {
        out.push_back(std::nan(""));
        continue;
      }
      v = &it->second;
    }
    double val = std::nan("");
    if (name == "c_stat") val = v->c_stat;
    else if (name == "c_degradation") val = v->c_degradation;
    else if (name == "cal_slope") val = v->cal_slope;
    else if (name == "cal_intercept") val = v->cal_intercept;
    else if (name == "mape") val = v->mape;
    else if (name == "rmspe") val = v->rmspe;
    else if (name == "r2_cox_snell") val = v->r2_cox_snell;
    else if (name == "r2_nagelkerke") val = v->r2_nagelkerke;
    else if (threshold_idx < v->utility.size()) {
      const auto& u = v->utility[threshold_idx];
      if (name == "nb_model") val = u.nb_model;
      else if (name == "nb_max") val = u.nb_max;
      else if (name == "nb_treat_all") val = u.nb_treat_all;
      else if (name == "nb_treat_none") val = u.nb_treat_none;
      else if (name == "rvsi_model") val = u.rvsi_model;
      else if (name == "rvsi_winner") val = u.rvsi_winner;
      else if (name == "winner_model") val = u.winner < 0 ? std::nan("") : (u.winner == 0 ? 1.0 : 0.0);
      else if (name == "winner_treat_all") val = u.winner < 0 ? std::nan("") : (u.winner == 1 ? 1.0 : 0.0);
      else if (name == "winner_treat_none") val = u.winner < 0 ? std::nan("") : (u.winner == 2 ? 1.0 : 0.0);
    }
    out.push_back(val);
  }
  return out;
}

const std::vector<std::string>& scalar_metric_names() {
  static const std::vector<std::string> names = {
      "c_stat", "c_degradation", "cal_slope", "cal_intercept",
      "mape",   "rmspe",         "r2_cox_snell", "r2_nagelkerke"};
  return names;
}

const std::vector<std::string>& utility_metric_names() {
  static const std::vector<std::string> names = {
      "nb_model",    "nb_max",           "nb_treat_all",     "nb_treat_none", "rvsi_model",
      "rvsi_winner", "winner_model",     "winner_treat_all", "winner_treat_none"};
  return names;
}

std::vector<std::string> collect_subgroups(const MetricDraws& draws) {
  std::vector<std::string> out{"overall"};
  for (const auto& per_iter : draws.per_strategy)
    for (const auto& d : per_iter)
      for (const auto& [label, _] : d.subgroups)
        if (std::find(out.begin(), out.end(), label) == out.end()) out.push_back(label);
  std::sort(out.begin() + 1, out.end());
  return out;
}

}  // namespace

SummaryReport summarize(const ScenarioConfig& config, const MetricDraws& draws,
                        const InstabilityData* instability) {
  SummaryReport report;
  report.master_seed = config.master_seed;
  report.iterations = config.iterations;

  auto subgroups = collect_subgroups(draws);

  for (std::size_t s = 0; s < draws.strategy_labels.size(); ++s) {
    for (std::size_t ti = 0; ti < draws.thresholds.size(); ++ti) {
      const double t = draws.thresholds[ti];
      const std::string suffix = threshold_suffix(t);
      for (const auto& subgroup : subgroups) {
        SummaryBlock block;
        block.n = draws.n;
        block.variant = draws.variant;
        block.strategy = draws.strategy_labels[s];
        block.threshold = t;
        block.subgroup = subgroup;

        std::map<std::string, std::vector<double>> series;
        for (const auto& name : scalar_metric_names()) {
          auto vals = metric_series(draws, s, subgroup, name, ti);
          block.metrics.emplace_back(name, summarize_series(vals));
          series[name] = std::move(vals);
        }
        for (const auto& name : utility_metric_names()) {
          auto vals = metric_series(draws, s, subgroup, name, ti);
          block.metrics.emplace_back(name + suffix, summarize_series(vals));
          series[name + suffix] = std::move(vals);
          series[name] = series[name + suffix];
        }

        // Individual-level series from the instability pass (overall block only).
        if (instability && subgroup == "overall" && s < instability->strategies.size()) {
          const auto& ps = instability->strategies[s];
          if (!ps.widths.empty()) {
            block.metrics.emplace_back("interval_width", summarize_series(ps.widths));
            series["interval_width"] = ps.widths;
          }
          if (ti < ps.misclass.size() && !ps.misclass[ti].empty()) {
            block.metrics.emplace_back("pmisclass" + suffix, summarize_series(ps.misclass[ti]));
            series["pmisclass" + suffix] = ps.misclass[ti];
            series["pmisclass"] = ps.misclass[ti];
          }
        }

        for (const auto& criterion : config.criteria) {
          auto it = series.find(criterion.metric);
          double prob = std::nan("");
          if (it != series.end()) prob = assurance_probability(it->second, criterion);
          block.criterion_probs.emplace_back(criterion.id(), prob);
        }
        report.blocks.push_back(std::move(block));
      }
    }
  }
  return report;
}

ScenarioResult merge_scenario_results(std::vector<ScenarioResult> parts) {
  if (parts.empty()) throw ConfigError("merge_scenario_results: nothing to merge");
  ScenarioResult out = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto& p = parts[i];
    if (p.draws.n != out.draws.n || p.draws.variant != out.draws.variant)
      throw ConfigError("merge_scenario_results: mismatched (n, variant)");
    for (auto& l : p.draws.strategy_labels) out.draws.strategy_labels.push_back(std::move(l));
    for (auto& v : p.draws.per_strategy) out.draws.per_strategy.push_back(std::move(v));
    for (auto& v : p.draws.fit_failed) out.draws.fit_failed.push_back(std::move(v));
    for (auto& v : p.draws.fit_errors) out.draws.fit_errors.push_back(std::move(v));
    for (auto& b : p.summary.blocks) out.summary.blocks.push_back(std::move(b));
    for (auto& w : p.summary.warnings) out.summary.warnings.push_back(std::move(w));
    for (auto& s : p.instability.strategies) out.instability.strategies.push_back(std::move(s));
    for (auto& m : p.first_models) out.first_models.push_back(std::move(m));
    out.wall_seconds += p.wall_seconds;
  }
  return out;
}

SweepResult sweep(const ScenarioConfig& config, const CaseMix& master_casemix) {
  SweepResult result;
  std::vector<int> variants = config.noise_variants.empty() ? std::vector<int>{0}
                                                            : config.noise_variants;

  for (int noise : variants) {
    std::string variant = noise == 0 ? "base" : "noise" + std::to_string(noise);
    CaseMix casemix = noise == 0 ? master_casemix
                                 : append_noise_columns(master_casemix, noise,
                                                        mix_seed(config.master_seed, 0xA01 + noise));
    for (auto n : config.n_values) {
      ScenarioConfig one = config;
      one.n_values = {n};
      auto run = run_scenario(one, casemix);
      run.draws.variant = variant;
      for (auto& b : run.summary.blocks) b.variant = variant;
      result.runs.push_back(std::move(run));
    }
  }

  // Verdicts: per (variant, strategy), smallest configured n whose blocks meet
  // every criterion at its target probability.
  for (int noise : variants) {
    std::string variant = noise == 0 ? "base" : "noise" + std::to_string(noise);
    for (const auto& strat : config.strategies) {
      SweepVerdict verdict;
      verdict.variant = variant;
      verdict.strategy = strat.label;
      for (auto n : config.n_values) {
        bool all_pass = !config.criteria.empty();
        for (const auto& run : result.runs) {
          if (run.draws.variant != variant || run.draws.n != n) continue;
          for (const auto& block : run.summary.blocks) {
            if (block.strategy != strat.label || block.subgroup != "overall") continue;
            for (std::size_t c = 0; c < config.criteria.size(); ++c) {
              double prob = block.criterion_probs[c].second;
              if (is_missing(prob) || prob < config.criteria[c].target_prob) all_pass = false;
            }
          }
        }
        verdict.pass_by_n[n] = all_pass;
        if (all_pass && verdict.minimal_n < 0) verdict.minimal_n = n;
      }
      // Minimal n must honour the sorted order of the configured grid.
      std::vector<std::int64_t> sorted_n = config.n_values;
      std::sort(sorted_n.begin(), sorted_n.end());
      verdict.minimal_n = -1;
      for (auto n : sorted_n)
        if (verdict.pass_by_n[n]) {
          verdict.minimal_n = n;
          break;
        }
      result.verdicts.push_back(std::move(verdict));
    }
  }
  return result;
}

}  // namespace samplan
