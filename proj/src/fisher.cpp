#include "samplan/fisher.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "samplan/rng.hpp"
#include "samplan/summation.hpp"

namespace samplan {

namespace {

constexpr double kPredClamp = 1e-10;

double clamp_pred(double p) { return std::min(std::max(p, kPredClamp), 1.0 - kPredClamp); }

}  // namespace

UnitInformation unit_information(const CaseMix& casemix, const ReferenceModel& model) {
  const auto aligned = model.aligned_to(casemix);
  const auto coef = aligned.effective_coefficients();
  const std::int64_t n = casemix.n_rows();
  const Eigen::Index P = casemix.n_cols();
  const Eigen::Index dim = P + 1;

  // Fixed-size blocks combined in index order: parallel yet bit-exact for any
  // worker count.
  const std::int64_t block_size = 8192;
  const std::int64_t n_blocks = (n + block_size - 1) / block_size;
  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(n_blocks));

#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd x(dim);
    const std::int64_t lo = b * block_size;
    const std::int64_t hi = std::min(n, lo + block_size);
    for (std::int64_t i = lo; i < hi; ++i) {
      x[0] = 1.0;
      double eta = coef[0];
      for (Eigen::Index j = 0; j < P; ++j) {
        x[j + 1] = casemix.rows(i, j);
        eta += coef[static_cast<std::size_t>(j) + 1] * x[j + 1];
      }
      double p = 1.0 / (1.0 + std::exp(-eta));
      double w = p * (1.0 - p);
      acc.selfadjointView<Eigen::Lower>().rankUpdate(x, w);
    }
    partial[static_cast<std::size_t>(b)] = acc;
  }

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& m : partial) total += m;
  total = total.selfadjointView<Eigen::Lower>();
  total /= static_cast<double>(n);

  // Rank check; failures report the dependent columns. LLT alone can slip
  // through on numerically singular matrices, so the rank test is a
  // thresholded pivoted QR.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(total);
  qr.setThreshold(1e-9);
  if (qr.rank() < dim) {
    std::string names;
    auto perm = qr.colsPermutation().indices();
    for (Eigen::Index c = qr.rank(); c < dim; ++c) {
      Eigen::Index col = perm[c];
      if (!names.empty()) names += ", ";
      names += col == 0 ? "(intercept)" : casemix.columns[static_cast<std::size_t>(col - 1)].name;
    }
    throw DegenerateError("unit_information: rank-deficient design; dependent columns: " + names);
  }

  UnitInformation info;
  info.matrix = std::move(total);
  info.source_rows = n;
  return info;
}

namespace {

// Cholesky with escalating diagonal jitter for numerically semi-definite
// covariance matrices (near-collinear dummies).
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  for (double jitter = 1e-10; jitter <= 1e-6; jitter *= 10.0) {
    Eigen::MatrixXd adjusted = cov;
    adjusted.diagonal().array() += jitter;
    llt.compute(adjusted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw ConvergenceError("covariance Cholesky failed even with 1e-6 jitter");
}

}  // namespace

CoefficientDraws draw_mvn_models(const ReferenceModel& model, const UnitInformation& info,
                                 std::int64_t n, int draws, std::uint64_t rng_seed) {
  if (n < 1) throw ConfigError("draw_mvn_models: n must be >= 1");
  if (draws < 1) throw ConfigError("draw_mvn_models: draws must be >= 1");
  const auto coef = model.effective_coefficients();
  const auto dim = static_cast<Eigen::Index>(coef.size());
  if (info.matrix.rows() != dim)
    throw AlignmentError("draw_mvn_models: information matrix dimension mismatch");

  Eigen::MatrixXd cov = info.matrix.llt().solve(Eigen::MatrixXd::Identity(dim, dim));
  cov /= static_cast<double>(n);
  Eigen::MatrixXd L = cholesky_with_jitter(cov);

  CoefficientDraws out;
  out.provenance = CoefficientDraws::Provenance::mvn;
  out.n_used = n;
  out.column_names = model.column_names;
  out.draws.resize(draws, dim);

#pragma omp parallel for schedule(static)
  for (int d = 0; d < draws; ++d) {
    auto stream = make_stream(rng_seed, static_cast<std::uint64_t>(d), Role::fit);
    Eigen::VectorXd z(dim);
    for (Eigen::Index j = 0; j < dim; ++j) z[j] = stream.normal();
    Eigen::VectorXd theta = L * z;
    for (Eigen::Index j = 0; j < dim; ++j)
      out.draws(d, j) = coef[static_cast<std::size_t>(j)] + theta[j];
  }
  return out;
}

CoefficientDraws bayes_onesample(const ReferenceModel& model, const UnitInformation& info,
                                 std::int64_t n, const PriorSpec& prior, const McmcConfig& mcmc,
                                 std::uint64_t rng_seed, Diagnostics* diagnostics) {
  if (n < 1) throw ConfigError("bayes_onesample: n must be >= 1");
  const auto coef = model.effective_coefficients();
  const auto dim = static_cast<Eigen::Index>(coef.size());
  if (info.matrix.rows() != dim)
    throw AlignmentError("bayes_onesample: information matrix dimension mismatch");

  // "Likelihood": beta_hat ~ MVN(beta, n^-1 I^-1), i.e. a quadratic form in
  // (beta - beta_hat) with precision n*I.
  Eigen::MatrixXd precision = info.matrix * static_cast<double>(n);
  Eigen::VectorXd beta_hat(dim);
  for (Eigen::Index j = 0; j < dim; ++j) beta_hat[j] = coef[static_cast<std::size_t>(j)];

  const bool sample_lambda = !prior.fixed_lambda2.has_value();
  auto log_target = [&](const std::vector<double>& state) {
    double lambda2 =
        sample_lambda ? std::exp(state[static_cast<std::size_t>(dim)]) : *prior.fixed_lambda2;
    Eigen::VectorXd beta(dim);
    for (Eigen::Index j = 0; j < dim; ++j) beta[j] = state[static_cast<std::size_t>(j)];
    Eigen::VectorXd delta = beta - beta_hat;
    double lt = -0.5 * delta.dot(precision * delta);
    std::vector<double> c(state.begin(), state.begin() + dim);
    lt += log_prior_coefficients(c, lambda2, prior);
    if (sample_lambda) lt += log_hyperprior_lambda2(lambda2, prior) + std::log(lambda2);
    return lt;
  };

  std::vector<double> init(static_cast<std::size_t>(dim) + (sample_lambda ? 1 : 0), 0.0);
  for (Eigen::Index j = 0; j < dim; ++j) init[static_cast<std::size_t>(j)] = beta_hat[j];
  auto result = run_metropolis(log_target, init, mcmc, rng_seed, static_cast<int>(dim));

  if (diagnostics) {
    diagnostics->mcmc_acceptance = result.acceptance;
    diagnostics->converged = !result.low_acceptance;
    if (result.low_acceptance)
      diagnostics->notes.push_back("MCMC acceptance below 0.05 after adaptation");
    if (result.split_chain_flag)
      diagnostics->notes.push_back("split-chain halves differ by > 4 MC-SE");
  }

  CoefficientDraws out;
  out.provenance = CoefficientDraws::Provenance::bayes_onesample;
  out.n_used = n;
  out.column_names = model.column_names;
  out.draws.resize(static_cast<Eigen::Index>(result.samples.size()), dim);
  for (std::size_t d = 0; d < result.samples.size(); ++d)
    for (Eigen::Index j = 0; j < dim; ++j)
      out.draws(static_cast<Eigen::Index>(d), j) = result.samples[d][static_cast<std::size_t>(j)];
  return out;
}

ScenarioResult approx_scenario(const ScenarioConfig& config, const CoefficientDraws& draws,
                               const TargetPopulation& population,
                               const std::string& strategy_label) {
  auto t0 = std::chrono::steady_clock::now();
  const auto n_draws = static_cast<int>(draws.draws.rows());
  const auto P = population.casemix.n_cols();
  if (draws.draws.cols() != P + 1)
    throw AlignmentError("approx_scenario: coefficient draws do not match the population columns");

  const double ref_c = c_statistic(population.true_risk, population.outcome);
  const std::size_t n_thresholds = config.thresholds.size();
  const auto tracked_count = static_cast<std::size_t>(
      std::min<std::int64_t>(config.instability_sample, population.size()));
  const bool track = config.emit_instability && tracked_count > 0;

  MetricDraws md;
  md.n = draws.n_used;
  md.thresholds = config.thresholds;
  md.strategy_labels = {strategy_label};
  md.per_strategy.assign(1, std::vector<MetricDraw>(static_cast<std::size_t>(n_draws)));
  md.fit_failed.assign(1, std::vector<std::uint8_t>(static_cast<std::size_t>(n_draws), 0));
  md.fit_errors.assign(1, std::vector<std::string>(static_cast<std::size_t>(n_draws)));
  md.model_index.assign(static_cast<std::size_t>(n_draws), 0);

  std::vector<std::vector<double>> tracked(track ? static_cast<std::size_t>(n_draws) : 0);
  std::vector<CalibrationCurve> curves(
      track ? static_cast<std::size_t>(std::min(config.curves_emitted, n_draws)) : 0);
  std::vector<int> curve_ids(curves.size());

  const std::int64_t pop_n = population.size();

#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < n_draws; ++d) {
    const auto du = static_cast<std::size_t>(d);
    // Risks for every individual under coefficient draw d.
    std::vector<double> risks(static_cast<std::size_t>(pop_n));
    for (std::int64_t i = 0; i < pop_n; ++i) {
      double eta = draws.draws(d, 0);
      for (Eigen::Index j = 0; j < P; ++j) eta += draws.draws(d, j + 1) * population.casemix.rows(i, j);
      risks[static_cast<std::size_t>(i)] = clamp_pred(1.0 / (1.0 + std::exp(-eta)));
    }

    // Surrogate development sample for winner selection: n_used rows from the
    // population with fresh outcomes from their true risks.
    const std::uint64_t draw_key = mix_seed(config.master_seed, 0xF15E + static_cast<std::uint64_t>(d));
    auto stream = make_stream(draw_key, 0, Role::dev_surrogate);
    const auto n_dev = static_cast<std::size_t>(std::min<std::int64_t>(draws.n_used, pop_n));
    std::vector<double> dev_risks(n_dev);
    std::vector<std::uint8_t> dev_y(n_dev);
    for (std::size_t i = 0; i < n_dev; ++i) {
      auto row = static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(pop_n)));
      double eta = draws.draws(d, 0);
      for (Eigen::Index j = 0; j < P; ++j)
        eta += draws.draws(d, j + 1) * population.casemix.rows(row, j);
      dev_risks[i] = clamp_pred(1.0 / (1.0 + std::exp(-eta)));
      dev_y[i] = stream.uniform() < population.true_risk[static_cast<std::size_t>(row)] ? 1 : 0;
    }

    EvaluationInputs in;
    in.model_risks = risks;
    in.true_risks = population.true_risk;
    in.outcomes = population.outcome;
    in.reference_cstat = ref_c;
    in.dev_model_risks = dev_risks;
    in.dev_outcomes = dev_y;
    in.thresholds = config.thresholds;
    md.per_strategy[0][du].overall = evaluate_model(in);

    if (track) {
      tracked[du].assign(tracked_count, 0.0);
      for (std::size_t i = 0; i < tracked_count; ++i) tracked[du][i] = risks[i];
      if (d < static_cast<int>(curves.size())) {
        try {
          curves[du] = calibration_curve(risks, population.outcome);
        } catch (const std::runtime_error&) {
          curves[du] = CalibrationCurve{};
        }
        curve_ids[du] = d;
      }
    }
  }

  ScenarioResult result;
  result.draws = std::move(md);

  if (track) {
    InstabilityData inst;
    inst.tracked_ids.resize(tracked_count);
    std::iota(inst.tracked_ids.begin(), inst.tracked_ids.end(), std::int64_t{0});
    inst.tracked_truths.emplace_back(population.true_risk.begin(),
                                     population.true_risk.begin() +
                                         static_cast<std::int64_t>(tracked_count));
    inst.draw_model_index = result.draws.model_index;
    InstabilityData::PerStrategy ps;
    ps.strategy = strategy_label;
    ps.per_draw_risks = std::move(tracked);
    ps.curves = std::move(curves);
    ps.curve_draw_ids = std::move(curve_ids);
    ps.widths = interval_widths(ps.per_draw_risks);
    for (double t : config.thresholds) {
      std::vector<double> mis(tracked_count, 0.0);
      for (const auto& dr : ps.per_draw_risks)
        for (std::size_t i = 0; i < tracked_count; ++i) {
          double truth = inst.tracked_truths[0][i];
          if ((dr[i] > t && truth < t) || (dr[i] < t && truth > t)) mis[i] += 1.0;
        }
      for (auto& v : mis) v /= static_cast<double>(ps.per_draw_risks.size());
      ps.misclass.push_back(std::move(mis));
    }
    inst.strategies.push_back(std::move(ps));
    result.instability = std::move(inst);
  }

  ScenarioConfig cfg = config;
  cfg.n_values = {draws.n_used};
  cfg.iterations = n_draws;
  result.summary = summarize(cfg, result.draws, track ? &result.instability : nullptr);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace samplan
