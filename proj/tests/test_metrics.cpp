#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "samplan/metrics.hpp"
#include "samplan/rng.hpp"
#include "samplan/serial_ref.hpp"
#include "samplan/summation.hpp"

using namespace samplan;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("c-statistic on two perfectly ordered rows is 1") {
  std::vector<double> risks{0.9, 0.1};
  std::vector<std::uint8_t> y{1, 0};
  CHECK(c_statistic(risks, y) == 1.0);
}

TEST_CASE("all-tied risks give exactly 1/2") {
  std::vector<double> risks(20, 0.4);
  std::vector<std::uint8_t> y(20, 0);
  for (int i = 0; i < 7; ++i) y[static_cast<std::size_t>(i)] = 1;
  CHECK(c_statistic(risks, y) == 0.5);
}

TEST_CASE("rank c-statistic equals the all-pairs oracle to 1e-12") {
  auto rng = make_stream(100, 0, Role::fit);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> risks(200);
    std::vector<std::uint8_t> y(200);
    bool any0 = false, any1 = false;
    for (int i = 0; i < 200; ++i) {
      // Coarse grid forces plenty of ties.
      risks[static_cast<std::size_t>(i)] = std::floor(rng.uniform() * 20.0) / 20.0;
      y[static_cast<std::size_t>(i)] = rng.bernoulli(0.4);
      (y[static_cast<std::size_t>(i)] ? any1 : any0) = true;
    }
    if (!any0 || !any1) continue;
    double fast = c_statistic(risks, y);
    double brute = serial::c_statistic_allpairs(risks, y);
    CHECK(std::abs(fast - brute) <= 1e-12);
  }
}

TEST_CASE("c-statistic is invariant under strictly increasing transforms") {
  auto rng = make_stream(101, 0, Role::fit);
  std::vector<double> risks(300);
  std::vector<std::uint8_t> y(300);
  for (int i = 0; i < 300; ++i) {
    risks[static_cast<std::size_t>(i)] = rng.uniform() * 0.98 + 0.01;
    y[static_cast<std::size_t>(i)] = rng.bernoulli(risks[static_cast<std::size_t>(i)]);
  }
  std::vector<double> squashed(300);
  for (int i = 0; i < 300; ++i)
    squashed[static_cast<std::size_t>(i)] = logistic(3.0 * logit(risks[static_cast<std::size_t>(i)]) + 1.0);
  CHECK(c_statistic(risks, y) == doctest::Approx(c_statistic(squashed, y)).epsilon(1e-14));
}

TEST_CASE("single-class outcomes are an error") {
  std::vector<double> risks{0.2, 0.4};
  std::vector<std::uint8_t> y{1, 1};
  CHECK_THROWS_AS(c_statistic(risks, y), DegenerateError);
}

TEST_CASE("self-calibrated risks recover slope 1 and intercept 0") {
  auto rng = make_stream(102, 0, Role::fit);
  const int n = 1000000;
  std::vector<double> risks(n);
  std::vector<std::uint8_t> y(n);
  for (int i = 0; i < n; ++i) {
    double l = rng.normal() * 1.2 + 0.8;
    risks[static_cast<std::size_t>(i)] = logistic(l);
    y[static_cast<std::size_t>(i)] = rng.bernoulli(risks[static_cast<std::size_t>(i)]);
  }
  auto fit = calibration_fit(risks, y);
  CHECK(std::abs(fit.slope - 1.0) < 0.02);
  CHECK(std::abs(fit.intercept) < 0.02);
}

TEST_CASE("halved logits fit a calibration slope of 2") {
  auto rng = make_stream(103, 0, Role::fit);
  const int n = 1000000;
  std::vector<double> est(n);
  std::vector<std::uint8_t> y(n);
  for (int i = 0; i < n; ++i) {
    double l = rng.normal() * 1.5;
    est[static_cast<std::size_t>(i)] = logistic(0.5 * l);
    y[static_cast<std::size_t>(i)] = rng.bernoulli(logistic(l));
  }
  auto fit = calibration_fit(est, y);
  CHECK(std::abs(fit.slope - 2.0) < 0.05);
}

TEST_CASE("constant risks make recalibration degenerate") {
  std::vector<double> risks(50, 0.3);
  std::vector<std::uint8_t> y(50, 0);
  y[0] = y[1] = 1;
  CHECK_THROWS_AS(calibration_fit(risks, y), DegenerateError);
}

TEST_CASE("calibration slope ignores constant logit shifts") {
  auto rng = make_stream(104, 0, Role::fit);
  const int n = 5000;
  std::vector<double> est(n), shifted(n);
  std::vector<std::uint8_t> y(n);
  for (int i = 0; i < n; ++i) {
    double l = rng.normal();
    est[static_cast<std::size_t>(i)] = logistic(l);
    shifted[static_cast<std::size_t>(i)] = logistic(l + 0.7);
    y[static_cast<std::size_t>(i)] = rng.bernoulli(logistic(1.3 * l - 0.2));
  }
  auto a = calibration_fit(est, y);
  auto b = calibration_fit(shifted, y);
  CHECK(a.slope == doctest::Approx(b.slope).epsilon(1e-6));
  CHECK(b.intercept == doctest::Approx(a.intercept - 0.7 * a.slope).epsilon(1e-4));
}

TEST_CASE("calibration curve tracks the identity on self-calibrated data") {
  auto rng = make_stream(105, 0, Role::fit);
  const int n = 1000000;
  std::vector<double> risks(n);
  std::vector<std::uint8_t> y(n);
  for (int i = 0; i < n; ++i) {
    double l = rng.normal() * 1.0 + 0.5;
    risks[static_cast<std::size_t>(i)] = logistic(l);
    y[static_cast<std::size_t>(i)] = rng.bernoulli(risks[static_cast<std::size_t>(i)]);
  }
  auto curve = calibration_curve(risks, y);
  REQUIRE(curve.grid.size() == 100);
  double worst = 0.0;
  for (std::size_t g = 0; g < curve.grid.size(); ++g)
    worst = std::max(worst, std::abs(curve.observed[g] - curve.grid[g]));
  CHECK(worst < 0.02);
  for (std::size_t g = 1; g < curve.grid.size(); ++g) CHECK(curve.grid[g] > curve.grid[g - 1]);
  CHECK(curve.grid.front() > 0.0);
  CHECK(curve.grid.back() < 1.0);
}

TEST_CASE("squared-risk distortion bends the curve above the identity at low risk") {
  auto rng = make_stream(106, 0, Role::fit);
  const int n = 200000;
  std::vector<double> est(n);
  std::vector<std::uint8_t> y(n);
  for (int i = 0; i < n; ++i) {
    double p = 0.05 + 0.9 * rng.uniform();
    est[static_cast<std::size_t>(i)] = p * p;  // understates the true risk
    y[static_cast<std::size_t>(i)] = rng.bernoulli(p);
  }
  auto curve = calibration_curve(est, y);
  // Observed outcomes exceed the stated risk on the low end.
  for (std::size_t g = 0; g < 10; ++g) CHECK(curve.observed[g] > curve.grid[g]);
}

TEST_CASE("prediction error arithmetic") {
  std::vector<double> a{0.2, 0.4}, b{0.3, 0.5};
  auto pe = prediction_error(a, b);
  CHECK(pe.mape == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(pe.rmspe == doctest::Approx(0.1).epsilon(1e-12));
  auto zero = prediction_error(a, a);
  CHECK(zero.mape == 0.0);
  CHECK(zero.rmspe == 0.0);
}

TEST_CASE("prediction error is permutation-equivariant") {
  auto rng = make_stream(107, 0, Role::fit);
  std::vector<double> est(500), truth(500);
  for (int i = 0; i < 500; ++i) {
    est[static_cast<std::size_t>(i)] = rng.uniform();
    truth[static_cast<std::size_t>(i)] = rng.uniform();
  }
  auto before = prediction_error(est, truth);
  std::vector<std::size_t> order(500);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 500; i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  std::vector<double> est2(500), truth2(500);
  for (std::size_t i = 0; i < 500; ++i) {
    est2[i] = est[order[i]];
    truth2[i] = truth[order[i]];
  }
  auto after = prediction_error(est2, truth2);
  CHECK(before.mape == doctest::Approx(after.mape).epsilon(1e-13));
  CHECK(before.rmspe == doctest::Approx(after.rmspe).epsilon(1e-13));
}

TEST_CASE("R2 of the prevalence model is zero and perfect risks approach 1") {
  std::vector<std::uint8_t> y(100, 0);
  for (int i = 0; i < 37; ++i) y[static_cast<std::size_t>(i)] = 1;
  std::vector<double> prev_risks(100, 0.37);
  auto r2 = r2_measures(prev_risks, y);
  CHECK(std::abs(r2.cox_snell) < 1e-12);
  CHECK(std::abs(r2.nagelkerke) < 1e-12);

  std::vector<double> perfect(100);
  for (int i = 0; i < 100; ++i)
    perfect[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] ? 1.0 - 1e-12 : 1e-12;
  auto r2p = r2_measures(perfect, y);
  CHECK(r2p.nagelkerke > 0.999);
}

TEST_CASE("R2 equals a direct log-likelihood computation to 1e-10") {
  auto rng = make_stream(108, 0, Role::fit);
  const int n = 100;
  std::vector<double> risks(n);
  std::vector<std::uint8_t> y(n);
  double events = 0.0;
  for (int i = 0; i < n; ++i) {
    risks[static_cast<std::size_t>(i)] = 0.05 + 0.9 * rng.uniform();
    y[static_cast<std::size_t>(i)] = rng.bernoulli(risks[static_cast<std::size_t>(i)]);
    events += y[static_cast<std::size_t>(i)];
  }
  if (events == 0 || events == n) return;
  double ll = 0.0, ll0 = 0.0;
  double prev = events / n;
  for (int i = 0; i < n; ++i) {
    double p = risks[static_cast<std::size_t>(i)];
    ll += y[static_cast<std::size_t>(i)] ? std::log(p) : std::log(1 - p);
    ll0 += y[static_cast<std::size_t>(i)] ? std::log(prev) : std::log(1 - prev);
  }
  double cs = 1.0 - std::exp(-(2.0 / n) * (ll - ll0));
  double nk = cs / (1.0 - std::exp((2.0 / n) * ll0));
  auto r2 = r2_measures(risks, y);
  CHECK(r2.cox_snell == doctest::Approx(cs).epsilon(1e-10));
  CHECK(r2.nagelkerke == doctest::Approx(nk).epsilon(1e-10));
}

TEST_CASE("net benefit at prevalence 0.68 with everyone treated is exactly 0.36") {
  std::vector<double> risks(100, 0.9);
  std::vector<std::uint8_t> y(100, 0);
  for (int i = 0; i < 68; ++i) y[static_cast<std::size_t>(i)] = 1;
  CHECK(net_benefit(risks, y, 0.5) == 0.36);
  CHECK(net_benefit_treat_all(0.68, 0.5) == doctest::Approx(0.36).epsilon(1e-15));
}

TEST_CASE("no risks above the threshold behaves like treat-none") {
  std::vector<double> risks(40, 0.1);
  std::vector<std::uint8_t> y(40, 0);
  y[0] = 1;
  CHECK(net_benefit(risks, y, 0.5) == 0.0);
}

TEST_CASE("hand-counted 10-row instance matches exactly") {
  std::vector<double> risks{0.9, 0.8, 0.7, 0.6, 0.55, 0.4, 0.3, 0.2, 0.6, 0.1};
  std::vector<std::uint8_t> y{1, 1, 0, 1, 0, 1, 0, 0, 0, 1};
  // risk >= 0.5 rows: 0,1,2,3,4,8 -> TP = {0,1,3} = 3, FP = {2,4,8} = 3.
  // NB = (3 - 3*(0.5/0.5)) / 10 = 0.
  CHECK(net_benefit(risks, y, 0.5) == 0.0);
  // At t = 0.25: treated rows all but 7,9 -> wait row7=0.2,row9=0.1 excluded.
  // TP = {0,1,3,5} = 4, FP = {2,4,6,8} = 4; NB = (4 - 4/3)/10.
  CHECK(net_benefit(risks, y, 0.25) ==
        doctest::Approx((4.0 - 4.0 * (0.25 / 0.75)) / 10.0).epsilon(1e-15));
}

TEST_CASE("net benefit equals the counting oracle on random instances") {
  auto rng = make_stream(109, 0, Role::fit);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> risks(50);
    std::vector<std::uint8_t> y(50);
    for (int i = 0; i < 50; ++i) {
      risks[static_cast<std::size_t>(i)] = rng.uniform();
      y[static_cast<std::size_t>(i)] = rng.bernoulli(0.5);
    }
    double t = 0.1 + 0.8 * rng.uniform();
    CHECK(net_benefit(risks, y, t) == doctest::Approx(serial::net_benefit_counted(risks, y, t)).epsilon(1e-15));
  }
}

TEST_CASE("value of information: perfect model has RVSI 100 and wins sensibly") {
  auto rng = make_stream(110, 0, Role::fit);
  const int n = 20000;
  std::vector<double> truth(n);
  std::vector<std::uint8_t> y(n);
  for (int i = 0; i < n; ++i) {
    truth[static_cast<std::size_t>(i)] = logistic(rng.normal() + 0.8);
    y[static_cast<std::size_t>(i)] = rng.bernoulli(truth[static_cast<std::size_t>(i)]);
  }
  std::vector<double> dev_risks(truth.begin(), truth.begin() + 500);
  std::vector<std::uint8_t> dev_y(y.begin(), y.begin() + 500);
  VoiInputs in{truth, truth, y, dev_risks, dev_y, 0.5};
  auto u = value_of_information(in);
  CHECK(u.rvsi_model == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(u.nb_model == u.nb_max);
  double winner_nb = u.winner == 0 ? u.nb_model : (u.winner == 1 ? u.nb_treat_all : 0.0);
  CHECK(winner_nb >= u.nb_treat_all - 1e-15);
}

TEST_CASE("a deliberately bad model loses to treat-all in the development sample") {
  // 20-row hand example: the model ranks risks backwards.
  std::vector<double> truth(20), model(20);
  std::vector<std::uint8_t> y(20);
  for (int i = 0; i < 20; ++i) {
    truth[static_cast<std::size_t>(i)] = 0.3 + 0.02 * i;
    model[static_cast<std::size_t>(i)] = i < 14 ? 0.95 : 0.05;  // flags non-events, misses events
    y[static_cast<std::size_t>(i)] = i >= 14 ? 1 : 0;           // events are the last six rows
  }
  // Development sample = the same 20 rows. Model NB at t=0.5:
  // treated = rows 0..13, TP=0, FP=14 -> NB = (0 - 14)/20 = -0.7.
  // Treat-all NB = (6 - 14)/20 = -0.4. Treat-none = 0 -> winner = treat_none.
  VoiInputs in{model, truth, y, model, y, 0.5};
  auto u = value_of_information(in);
  CHECK(u.winner == static_cast<int>(WinnerKind::treat_none));

  // Flip the threshold so treating everyone is profitable: t = 0.2.
  // Model NB = (0 - 14*0.25)/20 = -0.175; treat-all = (6 - 14*0.25)/20 = 0.125.
  VoiInputs in2{model, truth, y, model, y, 0.2};
  auto u2 = value_of_information(in2);
  CHECK(u2.winner == static_cast<int>(WinnerKind::treat_all));
  CHECK(u2.nb_treat_all == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("rvsi_winner is never below the worst option's population RVSI") {
  auto rng = make_stream(111, 0, Role::fit);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2000;
    std::vector<double> truth(n), model(n);
    std::vector<std::uint8_t> y(n);
    for (int i = 0; i < n; ++i) {
      truth[static_cast<std::size_t>(i)] = logistic(rng.normal() + 0.75);
      model[static_cast<std::size_t>(i)] = logistic(0.5 * logit(truth[static_cast<std::size_t>(i)]) + rng.normal() * 0.4);
      y[static_cast<std::size_t>(i)] = rng.bernoulli(truth[static_cast<std::size_t>(i)]);
    }
    std::vector<double> dev_risks(model.begin(), model.begin() + 100);
    std::vector<std::uint8_t> dev_y(y.begin(), y.begin() + 100);
    VoiInputs in{model, truth, y, dev_risks, dev_y, 0.5};
    auto u = value_of_information(in);
    if (std::isnan(u.rvsi_winner)) continue;
    double worst = std::min({100.0 * u.nb_model / u.nb_max, 100.0 * u.nb_treat_all / u.nb_max, 0.0});
    CHECK(u.rvsi_winner >= worst - 1e-12);
  }
}

TEST_CASE("misclassification probability boundary semantics") {
  std::vector<double> truth{0.3, 0.7, 0.5};
  std::vector<std::vector<double>> draws{{0.3, 0.7, 0.5}};
  auto zero = misclassification_prob(draws, truth, 0.5);
  CHECK(zero == std::vector<double>{0.0, 0.0, 0.0});

  std::vector<std::vector<double>> flipped{{0.7, 0.3, 0.9}};
  auto one = misclassification_prob(flipped, truth, 0.5);
  CHECK(one[0] == 1.0);
  CHECK(one[1] == 1.0);
  CHECK(one[2] == 0.0);  // true risk exactly at the threshold never misclassifies
}

TEST_CASE("barely-above-threshold individual with symmetric noise sits near 1/2") {
  auto rng = make_stream(112, 0, Role::fit);
  const double t = 0.5, eps = 0.01;
  std::vector<double> truth{t + eps};
  std::vector<std::vector<double>> draws;
  for (int d = 0; d < 4000; ++d) draws.push_back({t + eps + 0.2 * rng.normal()});
  auto p = misclassification_prob(draws, truth, t);
  CHECK(std::abs(p[0] - 0.5) < 0.05);
}

TEST_CASE("interval widths: constants give zero, uniforms give 0.95") {
  std::vector<std::vector<double>> constant(100, std::vector<double>(5, 0.42));
  auto w0 = interval_widths(constant);
  for (double w : w0) CHECK(w == 0.0);

  auto rng = make_stream(113, 0, Role::fit);
  const int draws = 1000, individuals = 50;
  std::vector<std::vector<double>> u(draws, std::vector<double>(individuals));
  for (auto& row : u)
    for (auto& v : row) v = rng.uniform();
  auto w = interval_widths(u);
  CHECK(std::abs(mean(w) - 0.95) < 0.02);
}

TEST_CASE("subgroup report: one subgroup equals the overall report") {
  auto rng = make_stream(114, 0, Role::fit);
  const int n = 3000;
  std::vector<double> truth(n), model(n);
  std::vector<std::uint8_t> y(n);
  for (int i = 0; i < n; ++i) {
    truth[static_cast<std::size_t>(i)] = logistic(rng.normal());
    model[static_cast<std::size_t>(i)] = logistic(0.8 * logit(truth[static_cast<std::size_t>(i)]));
    y[static_cast<std::size_t>(i)] = rng.bernoulli(truth[static_cast<std::size_t>(i)]);
  }
  std::vector<double> dev_risks(model.begin(), model.begin() + 200);
  std::vector<std::uint8_t> dev_y(y.begin(), y.begin() + 200);
  std::vector<double> thresholds{0.5};
  EvaluationInputs in;
  in.model_risks = model;
  in.true_risks = truth;
  in.outcomes = y;
  in.reference_cstat = c_statistic(truth, y);
  in.dev_model_risks = dev_risks;
  in.dev_outcomes = dev_y;
  in.thresholds = thresholds;
  auto overall = evaluate_model(in);

  std::vector<std::string> labels(n, "everyone");
  std::vector<std::string> dev_labels(200, "everyone");
  auto by_group = subgroup_report(in, labels, dev_labels);
  REQUIRE(by_group.count("everyone") == 1);
  const auto& g = by_group.at("everyone");
  CHECK(g.c_stat == doctest::Approx(overall.c_stat).epsilon(1e-14));
  CHECK(g.mape == doctest::Approx(overall.mape).epsilon(1e-14));
  CHECK(g.cal_slope == doctest::Approx(overall.cal_slope).epsilon(1e-10));
  CHECK(g.utility[0].nb_model == doctest::Approx(overall.utility[0].nb_model).epsilon(1e-14));
}

TEST_CASE("pooled MAPE decomposes as the size-weighted subgroup mean") {
  auto rng = make_stream(115, 0, Role::fit);
  const int n = 1000;
  std::vector<double> truth(n), model(n);
  std::vector<std::uint8_t> y(n);
  std::vector<std::string> labels(n);
  for (int i = 0; i < n; ++i) {
    truth[static_cast<std::size_t>(i)] = logistic(rng.normal());
    model[static_cast<std::size_t>(i)] = logistic(rng.normal());
    y[static_cast<std::size_t>(i)] = rng.bernoulli(truth[static_cast<std::size_t>(i)]);
    labels[static_cast<std::size_t>(i)] = i < 400 ? "a" : "b";
  }
  std::vector<double> thresholds{0.5};
  EvaluationInputs in;
  in.model_risks = model;
  in.true_risks = truth;
  in.outcomes = y;
  in.reference_cstat = 0.5;
  in.dev_model_risks = model;
  in.dev_outcomes = y;
  in.thresholds = thresholds;
  auto overall = evaluate_model(in);
  auto by_group = subgroup_report(in, labels, labels);
  double pooled = (400.0 * by_group.at("a").mape + 600.0 * by_group.at("b").mape) / 1000.0;
  CHECK(pooled == doctest::Approx(overall.mape).epsilon(1e-12));
}

TEST_CASE("single-class subgroup loses the c-statistic but keeps MAPE") {
  std::vector<double> truth{0.2, 0.3, 0.8, 0.9};
  std::vector<double> model{0.25, 0.35, 0.7, 0.85};
  std::vector<std::uint8_t> y{0, 0, 1, 1};
  std::vector<std::string> labels{"lo", "lo", "hi", "hi"};
  std::vector<double> thresholds{0.5};
  EvaluationInputs in;
  in.model_risks = model;
  in.true_risks = truth;
  in.outcomes = y;
  in.reference_cstat = 1.0;
  in.dev_model_risks = model;
  in.dev_outcomes = y;
  in.thresholds = thresholds;
  auto by_group = subgroup_report(in, labels, labels);
  CHECK(std::isnan(by_group.at("lo").c_stat));
  CHECK(by_group.at("lo").mape == doctest::Approx(0.05).epsilon(1e-12));
}
