// samplan: simulation-based sample-size planning for clinical prediction
// models. Subcommands: calibrate | simulate | fisher | sweep.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "samplan/config.hpp"
#include "samplan/engine.hpp"
#include "samplan/fisher.hpp"
#include "samplan/outputs.hpp"

namespace {

using samplan::CliOverrides;
using samplan::ConfigError;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitWarnings = 3;
constexpr int kExitRuntime = 4;

struct CommonFlags {
  std::string config_path;
  CliOverrides overrides;
  int threads = 0;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_n = true) {
  cmd->add_option("--config", flags.config_path, "scenario config (JSON)")->required();
  if (with_n) cmd->add_option("--n", flags.overrides.n, "development sample size override");
  cmd->add_option("--iterations", flags.overrides.iterations, "iteration count override");
  cmd->add_option("--seed", flags.overrides.seed, "master seed override");
  cmd->add_option("--out", flags.overrides.out_dir, "output directory override");
  cmd->add_option("--threads", flags.threads, "OpenMP worker count (affects runtime only)");
  cmd->add_flag("--strict", flags.strict, "escalate scenario warnings to exit code 3");
}

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads <= 0) {
    if (const char* env = std::getenv("SAMPLAN_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_calibrate(const CommonFlags& flags, const std::string& command) {
  auto t0 = std::chrono::steady_clock::now();
  auto config = samplan::load_config_file(flags.config_path);
  auto run = samplan::resolve_calibration(config, flags.overrides);

  std::filesystem::create_directories(run.outputs.directory);
  std::vector<std::string> files;

  nlohmann::json model_json;
  model_json["alpha"] = run.model.alpha;
  model_json["delta"] = run.model.delta;
  model_json["weights"] = run.model.weights;
  model_json["columns"] = run.model.column_names;
  {
    std::string path = run.outputs.directory + "/reference_model.json";
    std::ofstream out(path, std::ios::binary);
    out << model_json.dump(2) << '\n';
    files.push_back(path);
  }
  {
    std::string path = run.outputs.directory + "/calibration_report.json";
    nlohmann::json rep;
    rep["achieved_cstat"] = run.report.achieved_cstat;
    rep["achieved_prevalence"] = run.report.achieved_prevalence;
    rep["alpha"] = run.report.alpha;
    rep["delta"] = run.report.delta;
    rep["outer_iterations"] = run.report.outer_iterations;
    rep["inner_iterations"] = run.report.inner_iterations;
    rep["converged"] = run.converged;
    if (!run.error.empty()) rep["error"] = run.error;
    std::ofstream out(path, std::ios::binary);
    out << rep.dump(2) << '\n';
    files.push_back(path);
  }
  samplan::write_manifest(run.outputs.directory, run.config_echo, run.master_seed, files,
                          {{"calibrate", seconds_since(t0)}}, command);
  std::cout << "calibrate: c=" << run.report.achieved_cstat
            << " prevalence=" << run.report.achieved_prevalence << " alpha=" << run.report.alpha
            << " delta=" << run.report.delta << (run.converged ? "" : "  [NOT CONVERGED]")
            << "\n";
  return run.converged ? kExitOk : kExitRuntime;
}

int finish_run(const samplan::ResolvedScenario& resolved,
               const std::vector<samplan::ScenarioResult>& runs,
               const std::vector<samplan::SweepVerdict>* verdicts,
               const std::vector<samplan::StageTiming>& timings, const std::string& command,
               bool strict) {
  auto t0 = std::chrono::steady_clock::now();
  auto files = samplan::write_run_outputs(resolved.outputs.directory, resolved, runs, verdicts,
                                          command);
  if (verdicts) {
    files.push_back(
        samplan::write_verdict(resolved.outputs.directory, resolved.config, *verdicts));
  }
  auto all_timings = timings;
  all_timings.push_back({"outputs", seconds_since(t0)});
  samplan::write_manifest(resolved.outputs.directory, resolved.config_echo,
                          resolved.config.master_seed, files, all_timings, command);

  bool any_warnings = false;
  for (const auto& run : runs)
    for (const auto& w : run.summary.warnings) {
      std::cerr << "warning: " << w << "\n";
      any_warnings = true;
    }
  std::cout << "outputs written to " << resolved.outputs.directory << "\n";
  return strict && any_warnings ? kExitWarnings : kExitOk;
}

int run_simulate(const CommonFlags& flags, const std::string& command) {
  auto config = samplan::load_config_file(flags.config_path);
  auto t0 = std::chrono::steady_clock::now();
  auto resolved = samplan::resolve_scenario(config, flags.overrides);
  std::vector<samplan::StageTiming> timings{{"resolve", seconds_since(t0)}};

  t0 = std::chrono::steady_clock::now();
  auto result = samplan::run_scenario(resolved.config, resolved.master_casemix);
  timings.push_back({"simulate", seconds_since(t0)});

  std::vector<samplan::ScenarioResult> runs;
  runs.push_back(std::move(result));
  return finish_run(resolved, runs, nullptr, timings, command, flags.strict);
}

int run_sweep(const CommonFlags& flags, const std::string& command) {
  auto config = samplan::load_config_file(flags.config_path);
  auto t0 = std::chrono::steady_clock::now();
  auto resolved = samplan::resolve_scenario(config, flags.overrides);
  std::vector<samplan::StageTiming> timings{{"resolve", seconds_since(t0)}};

  t0 = std::chrono::steady_clock::now();
  auto result = samplan::sweep(resolved.config, resolved.master_casemix);
  timings.push_back({"sweep", seconds_since(t0)});
  return finish_run(resolved, result.runs, &result.verdicts, timings, command, flags.strict);
}

int run_fisher(const CommonFlags& flags, const std::string& command) {
  auto config = samplan::load_config_file(flags.config_path);
  auto t0 = std::chrono::steady_clock::now();
  auto resolved = samplan::resolve_scenario(config, flags.overrides);
  std::vector<samplan::StageTiming> timings{{"resolve", seconds_since(t0)}};

  // The approximation path works with one reference model.
  const auto& cfg = resolved.config;
  if (cfg.reference_models.size() > 1)
    std::cerr << "warning: fisher path uses the first reference model of the mixture\n";

  t0 = std::chrono::steady_clock::now();
  auto [pop_casemix, dev_pool] =
      samplan::split_casemix(resolved.master_casemix, cfg.population_size, cfg.master_seed);
  (void)dev_pool;
  auto model = cfg.reference_models.front().aligned_to(pop_casemix);
  auto population = samplan::build_population(model, pop_casemix,
                                              samplan::mix_seed(cfg.master_seed, 0xB0B0));
  auto info = samplan::unit_information(pop_casemix, model);
  timings.push_back({"information", seconds_since(t0)});

  t0 = std::chrono::steady_clock::now();
  std::vector<samplan::ScenarioResult> parts;
  const auto n = cfg.n_values.front();
  for (const auto& strat : cfg.strategies) {
    samplan::CoefficientDraws draws;
    if (strat.kind == samplan::ModelKind::mle) {
      draws = samplan::draw_mvn_models(model, info, n, cfg.iterations,
                                       samplan::mix_seed(cfg.master_seed, 0xF1));
    } else if (strat.kind == samplan::ModelKind::bayes_ridge ||
               strat.kind == samplan::ModelKind::bayes_lasso) {
      samplan::PriorSpec prior = strat.prior;
      prior.family = strat.kind == samplan::ModelKind::bayes_ridge
                         ? samplan::PriorFamily::ridge
                         : samplan::PriorFamily::lasso;
      samplan::McmcConfig mcmc = strat.mcmc;
      // One-sample default burn-in is 10000 unless the config names one.
      bool burnin_explicit = false;
      if (resolved.config_echo.contains("mcmc") &&
          resolved.config_echo["mcmc"].contains("burn_in"))
        burnin_explicit = true;
      for (const auto& sj : resolved.config_echo["strategies"])
        if (sj.value("label", sj.value("kind", "")) == strat.label && sj.contains("mcmc") &&
            sj["mcmc"].contains("burn_in"))
          burnin_explicit = true;
      if (!burnin_explicit) mcmc.burn_in = 10000;
      draws = samplan::bayes_onesample(model, info, n, prior, mcmc,
                                       samplan::mix_seed(cfg.master_seed, 0xF2));
    } else {
      throw ConfigError("fisher: no approximation available for strategy '" + strat.label + "'");
    }
    parts.push_back(samplan::approx_scenario(cfg, draws, population, strat.label));
  }
  auto merged = samplan::merge_scenario_results(std::move(parts));
  timings.push_back({"fisher", seconds_since(t0)});

  std::vector<samplan::ScenarioResult> runs;
  runs.push_back(std::move(merged));
  return finish_run(resolved, runs, nullptr, timings, command, flags.strict);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation-based sample size planning for risk prediction models"};
  app.require_subcommand(1);

  CommonFlags calibrate_flags, simulate_flags, fisher_flags, sweep_flags;
  auto* cmd_calibrate =
      app.add_subcommand("calibrate", "calibrate a reference model to target c / prevalence");
  add_common(cmd_calibrate, calibrate_flags, false);
  auto* cmd_simulate = app.add_subcommand("simulate", "full simulation-based scenario run");
  add_common(cmd_simulate, simulate_flags);
  auto* cmd_fisher =
      app.add_subcommand("fisher", "fast approximation via unit-information decomposition");
  add_common(cmd_fisher, fisher_flags);
  auto* cmd_sweep = app.add_subcommand("sweep", "run every configured n and report the verdict");
  add_common(cmd_sweep, sweep_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string command = command_line(argc, argv);
  try {
    if (cmd_calibrate->parsed()) {
      apply_threads(calibrate_flags.threads);
      return run_calibrate(calibrate_flags, command);
    }
    if (cmd_simulate->parsed()) {
      apply_threads(simulate_flags.threads);
      return run_simulate(simulate_flags, command);
    }
    if (cmd_fisher->parsed()) {
      apply_threads(fisher_flags.threads);
      return run_fisher(fisher_flags, command);
    }
    if (cmd_sweep->parsed()) {
      apply_threads(sweep_flags.threads);
      return run_sweep(sweep_flags, command);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
