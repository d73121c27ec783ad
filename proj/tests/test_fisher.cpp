#include "doctest.h"

#include <cmath>

#include "samplan/fisher.hpp"
#include "samplan/serial_ref.hpp"
#include "samplan/summation.hpp"

using namespace samplan;

namespace {

CaseMix normal_casemix(int columns, std::int64_t rows, std::uint64_t seed) {
  MarginalSpec spec;
  for (int j = 1; j <= columns; ++j)
    spec.columns.push_back({"x" + std::to_string(j), Marginal::Dist::normal, 0.0, 1.0, 0.5, {}});
  return synthesize_casemix(spec, rows, seed);
}

ReferenceModel model_with(const CaseMix& cm, double alpha, double delta,
                          std::vector<double> weights) {
  ReferenceModel m;
  m.alpha = alpha;
  m.delta = delta;
  m.weights = std::move(weights);
  for (const auto& c : cm.columns) m.column_names.push_back(c.name);
  return m;
}

}  // namespace

TEST_CASE("intercept-only information is p(1-p) = 1/4 at risk one half") {
  CaseMix cm;
  cm.rows.resize(50, 0);
  ReferenceModel m;
  m.alpha = 0.0;
  m.delta = 0.0;
  auto info = unit_information(cm, m);
  REQUIRE(info.matrix.rows() == 1);
  CHECK(info.matrix(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("one zero-weight standard normal predictor gives a diagonal quarter matrix") {
  auto cm = normal_casemix(1, 100000, 21);
  auto m = model_with(cm, 0.0, 1.0, {0.0});
  auto info = unit_information(cm, m);
  CHECK(std::abs(info.matrix(0, 0) - 0.25) < 0.003);
  CHECK(std::abs(info.matrix(1, 1) - 0.25) < 0.003);
  CHECK(std::abs(info.matrix(0, 1)) < 0.003);

  // Direct row-averaging oracle.
  auto oracle = serial::unit_information_serial(cm, m);
  CHECK((info.matrix - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("information matrix is symmetric, PD, and Cholesky-factorable on a 10-column design") {
  auto cm = normal_casemix(10, 50000, 22);
  std::vector<double> w(10, 1.0);
  auto m = model_with(cm, 0.9, 0.3, w);
  auto info = unit_information(cm, m);
  CHECK((info.matrix - info.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::LLT<Eigen::MatrixXd> llt(info.matrix);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("rank-deficient designs name the dependent column") {
  auto cm = normal_casemix(2, 1000, 23);
  cm.columns.push_back({"dup", ColumnKind::continuous, ""});
  cm.rows.conservativeResize(Eigen::NoChange, 3);
  cm.rows.col(2) = cm.rows.col(0);
  auto m = model_with(cm, 0.0, 1.0, {1.0, 1.0, 1.0});
  try {
    unit_information(cm, m);
    FAIL("expected DegenerateError");
  } catch (const DegenerateError& e) {
    CHECK(std::string(e.what()).find("dependent columns") != std::string::npos);
  }
}

TEST_CASE("information is row-order invariant and unchanged under duplication") {
  auto cm = normal_casemix(3, 4000, 24);
  auto m = model_with(cm, 0.2, 0.5, {1.0, -0.5, 0.25});
  auto info = unit_information(cm, m).matrix;

  std::vector<std::int64_t> rev(4000);
  for (int i = 0; i < 4000; ++i) rev[static_cast<std::size_t>(i)] = 3999 - i;
  auto info_rev = unit_information(cm.take_rows(rev), m).matrix;
  CHECK((info - info_rev).cwiseAbs().maxCoeff() < 1e-12);

  std::vector<std::int64_t> doubled(8000);
  for (int i = 0; i < 8000; ++i) doubled[static_cast<std::size_t>(i)] = i % 4000;
  auto info_dup = unit_information(cm.take_rows(doubled), m).matrix;
  CHECK((info - info_dup).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("independent noise columns leave the original block alone") {
  auto base = normal_casemix(3, 100000, 25);
  auto m = model_with(base, 0.4, 0.6, {1.0, 1.0, 1.0});
  auto info_base = unit_information(base, m).matrix;

  auto noisy = append_noise_columns(base, 2, 99);
  auto m2 = m.aligned_to(noisy);
  auto info_noisy = unit_information(noisy, m2).matrix;
  // Sub-block over (intercept, original columns) within MC tolerance.
  CHECK((info_noisy.topLeftCorner(4, 4) - info_base).cwiseAbs().maxCoeff() < 0.01);
  // Cross terms with the independent noise shrink to zero.
  CHECK(info_noisy.block(0, 4, 4, 2).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("MVN draws collapse onto the reference at astronomical n") {
  auto cm = normal_casemix(2, 20000, 26);
  auto m = model_with(cm, 0.5, 0.8, {1.0, -1.0});
  auto info = unit_information(cm, m);
  auto draws = draw_mvn_models(m, info, 1000000000000ll, 50, 3);
  auto coef = m.effective_coefficients();
  for (int d = 0; d < 50; ++d)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(draws.draws(d, j) - coef[static_cast<std::size_t>(j)]) < 1e-4);
}

TEST_CASE("empirical covariance of MVN draws matches n^-1 I^-1") {
  auto cm = normal_casemix(2, 50000, 27);
  auto m = model_with(cm, 0.9, 0.4, {1.0, 1.0});
  auto info = unit_information(cm, m);
  const std::int64_t n = 456;
  auto draws = draw_mvn_models(m, info, n, 100000, 5);

  Eigen::MatrixXd target =
      info.matrix.llt().solve(Eigen::MatrixXd::Identity(3, 3)) / static_cast<double>(n);
  Eigen::RowVectorXd mean_draw = draws.draws.colwise().mean();
  Eigen::MatrixXd centered = draws.draws.rowwise() - mean_draw;
  Eigen::MatrixXd cov = centered.transpose() * centered / (draws.draws.rows() - 1.0);
  double scale = target.diagonal().maxCoeff();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      // Relative 5% where the entry is substantial; absolute elsewhere (the
      // Monte Carlo error of a near-zero covariance entry has no relative
      // scale to speak of).
      if (std::abs(target(a, b)) > 0.1 * scale)
        CHECK(std::abs(cov(a, b) / target(a, b) - 1.0) < 0.05);
      else
        CHECK(std::abs(cov(a, b) - target(a, b)) < 0.05 * scale);
    }
}

TEST_CASE("the coefficient covariance halves when n doubles") {
  auto cm = normal_casemix(2, 20000, 28);
  auto m = model_with(cm, 0.2, 0.7, {1.0, 0.5});
  auto info = unit_information(cm, m);
  auto a = draw_mvn_models(m, info, 100, 20000, 7);
  auto b = draw_mvn_models(m, info, 200, 20000, 7);
  auto var_of = [](const Eigen::MatrixXd& d, int col) {
    Eigen::VectorXd c = d.col(col);
    double mu = c.mean();
    return (c.array() - mu).square().sum() / (c.size() - 1.0);
  };
  for (int j = 0; j < 3; ++j) {
    double ratio = var_of(a.draws, j) / var_of(b.draws, j);
    CHECK(std::abs(ratio - 2.0) < 0.1);
  }
}

TEST_CASE("one-sample posterior under near-flat priors matches the analytic MVN") {
  auto cm = normal_casemix(4, 50000, 29);
  std::vector<double> w(4, 1.0);
  auto m = model_with(cm, 0.6, 0.35, w);
  auto info = unit_information(cm, m);
  const std::int64_t n = 456;

  PriorSpec prior;
  prior.family = PriorFamily::ridge;
  prior.intercept_variance = 1e8;
  prior.flat_slope_variance = 1e8;
  prior.fixed_lambda2 = 1.0;
  McmcConfig mcmc;
  mcmc.burn_in = 4000;
  mcmc.thin = 5;
  mcmc.draws = 3000;
  Diagnostics diag;
  auto draws = bayes_onesample(m, info, n, prior, mcmc, 17, &diag);
  REQUIRE(draws.draws.rows() == 3000);

  Eigen::MatrixXd cov_target =
      info.matrix.llt().solve(Eigen::MatrixXd::Identity(5, 5)) / static_cast<double>(n);
  auto coef = m.effective_coefficients();
  for (int j = 0; j < 5; ++j) {
    std::vector<double> series(static_cast<std::size_t>(draws.draws.rows()));
    for (Eigen::Index d = 0; d < draws.draws.rows(); ++d)
      series[static_cast<std::size_t>(d)] = draws.draws(d, j);
    // Batch-means MC-SE to absorb autocorrelation.
    const int batches = 30;
    const std::size_t bsize = series.size() / batches;
    std::vector<double> bmeans;
    for (int b = 0; b < batches; ++b) {
      std::span<const double> chunk(series.data() + b * bsize, bsize);
      bmeans.push_back(mean(chunk));
    }
    double se = sample_sd(bmeans) / std::sqrt(static_cast<double>(batches));
    CHECK(std::abs(mean(series) - coef[static_cast<std::size_t>(j)]) < 3.0 * se + 1e-3);
    double sd_target = std::sqrt(cov_target(j, j));
    CHECK(std::abs(sample_sd(series) / sd_target - 1.0) < 0.15);
  }
}

TEST_CASE("a single draw equal to the reference scores slope 1 and RVSI 100") {
  auto cm = normal_casemix(3, 30000, 30);
  std::vector<double> w(3, 1.0);
  auto cal = calibrate_reference(w, cm, 0.72, 0.5, 0.005, 60);
  auto pop = build_population(cal, cm, 31);

  CoefficientDraws draws;
  draws.n_used = 456;
  draws.column_names = cal.column_names;
  auto coef = cal.effective_coefficients();
  draws.draws.resize(1, 4);
  for (int j = 0; j < 4; ++j) draws.draws(0, j) = coef[static_cast<std::size_t>(j)];

  ScenarioConfig config;
  config.n_values = {456};
  config.iterations = 1;
  config.thresholds = {0.5};
  config.master_seed = 5;
  config.population_size = 30000;
  config.instability_sample = 100;
  config.curves_emitted = 1;
  StrategyConfig s;
  s.kind = ModelKind::mle;
  s.label = "mvn";
  config.strategies = {s};
  config.reference_models = {cal};
  config.model_probs = {1.0};

  auto result = approx_scenario(config, draws, pop, "mvn");
  const auto& v = result.draws.per_strategy[0][0].overall;
  CHECK(std::abs(v.cal_slope - 1.0) < 0.05);
  CHECK(v.utility[0].rvsi_model == doctest::Approx(100.0).epsilon(1e-9));
  // The draw path associates alpha + sum((delta*w_j) x_j) while the
  // reference path computes alpha + delta*sum(w_j x_j): equal to rounding.
  CHECK(std::abs(v.c_degradation) < 1e-9);
  CHECK(v.mape < 1e-12);
}
