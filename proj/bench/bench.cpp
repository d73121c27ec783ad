// Benchmark comparing the OpenMP kernels against the serial reference
// implementations, plus a small end-to-end scenario at 1 vs N threads.
// Each comparison also checks agreement, so a mismatch shows up here too.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "samplan/engine.hpp"
#include "samplan/fisher.hpp"
#include "samplan/metrics.hpp"
#include "samplan/population.hpp"
#include "samplan/serial_ref.hpp"

using namespace samplan;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Timed {
  double seconds;
  double value;  // checksum for agreement checks
};

template <typename F>
Timed timed(F&& f) {
  double t0 = now_seconds();
  double v = f();
  return {now_seconds() - t0, v};
}

void report(const std::string& name, const Timed& serial, const Timed& parallel, double tol) {
  double speedup = serial.seconds / std::max(parallel.seconds, 1e-12);
  bool ok = std::abs(serial.value - parallel.value) <= tol;
  std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   agree %s\n", name.c_str(),
              serial.seconds, parallel.seconds, speedup, ok ? "yes" : "NO");
}

}  // namespace

int main() {
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("samplan benchmark, %d thread(s)\n\n", threads);

  // Surrogate case-mix: 10 standard-normal predictors.
  MarginalSpec spec;
  for (int j = 1; j <= 10; ++j)
    spec.columns.push_back(Marginal{"x" + std::to_string(j), Marginal::Dist::normal, 0.0, 1.0,
                                    0.5, {}});
  const std::int64_t rows = 400000;
  auto casemix = synthesize_casemix(spec, rows, 42);

  ReferenceModel model;
  model.alpha = 0.9;
  model.delta = 0.3;
  model.weights.assign(10, 1.0);
  for (const auto& c : casemix.columns) model.column_names.push_back(c.name);

  // Risk evaluation kernel.
  {
    auto serial = timed([&] {
      auto r = serial::reference_risks_serial(model, casemix);
      return serial::naive_mean(r);
    });
    auto parallel = timed([&] {
      auto r = reference_risks(model, casemix);
      return serial::naive_mean(r);
    });
    report("reference_risks", serial, parallel, 1e-12);
  }

  // Unit Fisher information kernel.
  {
    auto serial = timed([&] { return serial::unit_information_serial(casemix, model).sum(); });
    auto parallel = timed([&] { return unit_information(casemix, model).matrix.sum(); });
    report("unit_information", serial, parallel, 1e-9);
  }

  // Concordance: fast rank statistic vs all-pairs on a 20k subset.
  {
    std::vector<std::int64_t> idx(20000);
    for (std::int64_t i = 0; i < 20000; ++i) idx[static_cast<std::size_t>(i)] = i;
    auto sub = casemix.take_rows(idx);
    auto risks = reference_risks(model, sub);
    auto outcomes = sample_outcomes(risks, 7);
    auto serial = timed([&] { return serial::c_statistic_allpairs(risks, outcomes); });
    auto parallel = timed([&] { return c_statistic(risks, outcomes); });
    report("c_statistic (20k rows)", serial, parallel, 1e-12);
  }

  // End-to-end mini scenario at 1 thread vs all threads.
  {
    ScenarioConfig config;
    config.n_values = {456};
    config.iterations = 40;
    config.thresholds = {0.5};
    config.master_seed = 11;
    config.population_size = 100000;
    config.instability_sample = 200;
    config.curves_emitted = 5;
    StrategyConfig strat;
    strat.kind = ModelKind::mle;
    strat.label = "mle";
    config.strategies = {strat};
    config.reference_models = {model};
    config.model_probs = {1.0};

    auto checksum = [](const ScenarioResult& r) {
      double acc = 0.0;
      for (const auto& d : r.draws.per_strategy[0])
        if (!std::isnan(d.overall.cal_slope)) acc += d.overall.cal_slope;
      return acc;
    };
#ifdef _OPENMP
    omp_set_num_threads(1);
#endif
    auto serial = timed([&] { return checksum(run_scenario(config, casemix)); });
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    auto parallel = timed([&] { return checksum(run_scenario(config, casemix)); });
    report("scenario (40 iterations)", serial, parallel, 0.0);
  }

  return 0;
}
