#include "doctest.h"

#include <cmath>
#include <numeric>
#include <set>

#include "samplan/metrics.hpp"
#include "samplan/population.hpp"
#include "samplan/serial_ref.hpp"
#include "samplan/summation.hpp"

using namespace samplan;

namespace {

CaseMix standard_normal_casemix(int columns, std::int64_t rows, std::uint64_t seed) {
  MarginalSpec spec;
  for (int j = 1; j <= columns; ++j)
    spec.columns.push_back({"x" + std::to_string(j), Marginal::Dist::normal, 0.0, 1.0, 0.5, {}});
  return synthesize_casemix(spec, rows, seed);
}

ReferenceModel unit_weight_model(const CaseMix& casemix, double alpha, double delta) {
  ReferenceModel m;
  m.alpha = alpha;
  m.delta = delta;
  m.weights.assign(static_cast<std::size_t>(casemix.n_cols()), 1.0);
  for (const auto& c : casemix.columns) m.column_names.push_back(c.name);
  return m;
}

}  // namespace

TEST_CASE("zero scale and intercept give risk one half everywhere") {
  auto cm = standard_normal_casemix(3, 100, 1);
  auto model = unit_weight_model(cm, 0.0, 0.0);
  auto risks = reference_risks(model, cm);
  for (double p : risks) CHECK(p == 0.5);
}

TEST_CASE("clinical-style coefficient vector matches a longhand spot evaluation") {
  // One row evaluated term by term against the engine.
  CaseMix cm;
  for (const auto* name :
       {"age", "log_gest_age", "hist1", "hist2", "log_creat_ratio", "log_urea", "creatinine",
        "sbp", "antihyp", "mgso4"})
    cm.columns.push_back({name, ColumnKind::continuous, ""});
  cm.rows.resize(1, 10);
  cm.rows << 29.0, std::log(31.0), 1.0, 0.0, std::log(24.0), std::log(5.1), 71.0, 142.0, 1.0, 0.0;

  ReferenceModel model;
  model.alpha = 14.8246;
  model.delta = 1.0;
  model.weights = {-0.204, -5.2265, -0.3243, -0.6236, 0.1665, 0.4574, -0.0038, 0.0232, 0.4552,
                   1.1425};
  for (const auto& c : cm.columns) model.column_names.push_back(c.name);

  double lp = 14.8246;
  lp += -0.204 * 29.0;
  lp += -5.2265 * std::log(31.0);
  lp += -0.3243 * 1.0;
  lp += -0.6236 * 0.0;
  lp += 0.1665 * std::log(24.0);
  lp += 0.4574 * std::log(5.1);
  lp += -0.0038 * 71.0;
  lp += 0.0232 * 142.0;
  lp += 0.4552 * 1.0;
  lp += 1.1425 * 0.0;
  double expected = 1.0 / (1.0 + std::exp(-lp));

  auto risks = reference_risks(model, cm);
  CHECK(risks[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("risks are invariant to row order and to the delta/weight split") {
  auto cm = standard_normal_casemix(4, 500, 2);
  auto model = unit_weight_model(cm, 0.3, 0.7);
  auto risks = reference_risks(model, cm);

  std::vector<std::int64_t> reversed(500);
  std::iota(reversed.begin(), reversed.end(), std::int64_t{0});
  std::reverse(reversed.begin(), reversed.end());
  auto cm_rev = cm.take_rows(reversed);
  auto risks_rev = reference_risks(model, cm_rev);
  for (int i = 0; i < 500; ++i)
    CHECK(risks[static_cast<std::size_t>(i)] == risks_rev[static_cast<std::size_t>(499 - i)]);

  // delta' = 2*delta with halved weights is the same model.
  ReferenceModel rescaled = model;
  rescaled.delta = 2.0 * model.delta;
  for (auto& w : rescaled.weights) w *= 0.5;
  auto risks2 = reference_risks(rescaled, cm);
  for (int i = 0; i < 500; ++i)
    CHECK(risks[static_cast<std::size_t>(i)] ==
          doctest::Approx(risks2[static_cast<std::size_t>(i)]).epsilon(1e-15));
}

TEST_CASE("parallel risk kernel agrees with the serial reference") {
  // The serial reference accumulates in a different order, so agreement is
  // to rounding, not bit-for-bit.
  auto cm = standard_normal_casemix(5, 20000, 3);
  auto model = unit_weight_model(cm, -0.2, 0.4);
  auto parallel = reference_risks(model, cm);
  auto serial = serial::reference_risks_serial(model, cm);
  double worst = 0.0;
  for (std::size_t i = 0; i < parallel.size(); ++i)
    worst = std::max(worst, std::abs(parallel[i] - serial[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("sampled outcomes are seed-reproducible and match extreme risks") {
  std::vector<double> near_one(2000, 1.0 - 1e-15);
  auto y = sample_outcomes(near_one, 1);
  for (auto v : y) CHECK(v == 1);

  std::vector<double> risks(100000, 0.68);
  auto a = sample_outcomes(risks, 7);
  auto b = sample_outcomes(risks, 7);
  CHECK(a == b);
  double frac = std::accumulate(a.begin(), a.end(), 0.0) / 100000.0;
  CHECK(std::abs(frac - 0.68) < 0.006);
}

TEST_CASE("calibration: zero-signal target is exact") {
  auto cm = standard_normal_casemix(3, 5000, 4);
  auto model = calibrate_reference({1.0, 1.0, 1.0}, cm, 0.5, 0.37);
  CHECK(model.delta == 0.0);
  CHECK(model.alpha == doctest::Approx(std::log(0.37 / 0.63)).epsilon(1e-12));
}

TEST_CASE("calibration hits the clinical operating point on a surrogate") {
  auto cm = standard_normal_casemix(10, 100000, 5);
  std::vector<double> weights(10, 1.0);
  CalibrationReport report;
  auto model = calibrate_reference(weights, cm, 0.76, 0.68, 0.005, 60, &report);
  CHECK(report.converged);
  CHECK(report.achieved_cstat >= 0.755);
  CHECK(report.achieved_cstat <= 0.765);
  CHECK(std::abs(report.achieved_prevalence - 0.68) <= 0.005);
  CHECK(model.delta > 0.0);

  // Idempotence at its own output: recalibrating to the achieved values
  // reproduces the same operating point.
  CalibrationReport again;
  calibrate_reference(weights, cm, report.achieved_cstat, report.achieved_prevalence, 0.005, 60,
                      &again);
  CHECK(std::abs(again.achieved_cstat - report.achieved_cstat) <= 0.005);
  CHECK(std::abs(again.achieved_prevalence - report.achieved_prevalence) <= 0.005);

  // A fresh 500k population realises the calibrated c within 0.01.
  auto big = standard_normal_casemix(10, 500000, 6);
  auto pop = build_population(model, big, 99);
  CHECK(std::abs(c_statistic(pop.true_risk, pop.outcome) - 0.76) < 0.01);
  CHECK(std::abs(pop.prevalence() - 0.68) < 0.01);
}

TEST_CASE("higher c-statistic targets need a larger scale") {
  auto cm = standard_normal_casemix(5, 60000, 7);
  std::vector<double> weights(5, 1.0);
  auto low = calibrate_reference(weights, cm, 0.71, 0.5, 0.005, 60);
  auto high = calibrate_reference(weights, cm, 0.82, 0.5, 0.005, 60);
  CHECK(high.delta > low.delta);
}

TEST_CASE("calibration refuses an all-zero weight vector for c > 0.5") {
  auto cm = standard_normal_casemix(2, 1000, 8);
  CHECK_THROWS_AS(calibrate_reference({0.0, 0.0}, cm, 0.75, 0.5), ConfigError);
}

TEST_CASE("build_population composes risks and outcomes and warns when small") {
  auto cm = standard_normal_casemix(3, 50000, 9);
  auto model = unit_weight_model(cm, 0.2, 0.5);
  Warnings warnings;
  auto pop = build_population(model, cm, 11, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("50000") != std::string::npos);

  auto risks = reference_risks(model, cm);
  auto outcomes = sample_outcomes(risks, 11);
  CHECK(pop.true_risk == risks);
  CHECK(pop.outcome == outcomes);

  // Outcome mean close to risk mean (4-sigma binomial bound).
  double pbar = mean(pop.true_risk);
  double bound = 4.0 * std::sqrt(pbar * (1.0 - pbar) / 50000.0);
  CHECK(std::abs(pop.prevalence() - pbar) < bound);
}

TEST_CASE("draw_sample: size checks, determinism, expected events") {
  auto cm = standard_normal_casemix(10, 30000, 10);
  std::vector<double> weights(10, 1.0);
  auto model = calibrate_reference(weights, cm, 0.76, 0.68, 0.005, 60);

  CHECK_THROWS_AS(draw_sample(cm, model, 30001, 1), ConfigError);

  auto s1 = draw_sample(cm, model, 456, 21);
  CHECK(s1.size() == 456);
  CHECK(s1.casemix.n_rows() == 456);
  // ~310 events in expectation at prevalence 0.68; allow 4 sigma.
  double expect = 456.0 * 0.68;
  double sd = std::sqrt(456.0 * 0.68 * 0.32);
  CHECK(std::abs(static_cast<double>(s1.events()) - expect) < 4.0 * sd + 10.0);

  auto s1_again = draw_sample(cm, model, 456, 21);
  CHECK(s1.outcome == s1_again.outcome);
  CHECK((s1.casemix.rows - s1_again.casemix.rows).cwiseAbs().maxCoeff() == 0.0);

  auto s2 = draw_sample(cm, model, 456, 22);
  CHECK((s1.casemix.rows - s2.casemix.rows).cwiseAbs().maxCoeff() > 0.0);

  auto s75 = draw_sample(cm, model, 75, 23);
  double expect75 = 75.0 * 0.68;
  CHECK(std::abs(static_cast<double>(s75.events()) - expect75) <
        4.0 * std::sqrt(75.0 * 0.68 * 0.32) + 5.0);
}

TEST_CASE("degenerate samples are flagged, not rejected") {
  auto cm = standard_normal_casemix(1, 2000, 11);
  auto model = unit_weight_model(cm, 12.0, 0.0);  // risk ~ 1 for everyone
  auto s = draw_sample(cm, model, 20, 3);
  CHECK(s.degenerate);
  CHECK(s.size() == 20);
}

TEST_CASE("aligned_to fills zero weights for columns the truth does not use") {
  auto cm = standard_normal_casemix(3, 100, 12);
  ReferenceModel m;
  m.alpha = 0.1;
  m.delta = 0.9;
  m.weights = {2.0};
  m.column_names = {"x2"};
  auto aligned = m.aligned_to(cm);
  CHECK(aligned.weights == std::vector<double>{0.0, 2.0, 0.0});
  ReferenceModel missing;
  missing.weights = {1.0};
  missing.column_names = {"nope"};
  CHECK_THROWS_AS(missing.aligned_to(cm), AlignmentError);
}
