#include "samplan/config.hpp"

#include <fstream>

#include "samplan/rng.hpp"

namespace samplan {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config field '" + where + "': " + what);
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) fail(where, "missing required key '" + key + "'");
  return j.at(key);
}

ColumnKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "continuous") return ColumnKind::continuous;
  if (s == "binary") return ColumnKind::binary;
  if (s == "dummy") return ColumnKind::dummy;
  fail(where, "unknown column kind '" + s + "'");
}

std::vector<ColumnSpec> parse_schema(const json& cols, const std::string& where) {
  std::vector<ColumnSpec> schema;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto& c = cols.at(i);
    ColumnSpec cs;
    cs.name = require(c, "name", where).get<std::string>();
    cs.kind = parse_kind(c.value("kind", "continuous"), where + ".kind");
    cs.parent = c.value("parent", "");
    schema.push_back(std::move(cs));
  }
  return schema;
}

CaseMix build_master_casemix(const json& data, std::uint64_t master_seed) {
  std::string source = require(data, "source", "data").get<std::string>();
  std::optional<std::string> subgroup;
  if (data.contains("subgroup") && !data.at("subgroup").is_null())
    subgroup = data.at("subgroup").get<std::string>();

  if (source == "csv") {
    const auto& csv = require(data, "csv", "data");
    auto schema = parse_schema(require(csv, "columns", "data.csv"), "data.csv.columns");
    return ingest_casemix(require(csv, "path", "data.csv").get<std::string>(), schema, subgroup);
  }
  if (source == "synthesize") {
    const auto& syn = require(data, "synthesize", "data");
    MarginalSpec spec;
    spec.subgroup = subgroup;
    spec.noise_extra = syn.value("noise_extra", 0);
    for (const auto& c : require(syn, "columns", "data.synthesize")) {
      Marginal m;
      m.name = require(c, "name", "data.synthesize.columns").get<std::string>();
      std::string dist = c.value("dist", "normal");
      if (dist == "normal") {
        m.dist = Marginal::Dist::normal;
        m.mean = c.value("mean", 0.0);
        m.sd = c.value("sd", 1.0);
      } else if (dist == "bernoulli") {
        m.dist = Marginal::Dist::bernoulli;
        m.prob = require(c, "prob", "data.synthesize.columns").get<double>();
      } else if (dist == "empirical") {
        m.dist = Marginal::Dist::empirical;
        auto path = require(c, "path", "data.synthesize.columns").get<std::string>();
        auto column = require(c, "column", "data.synthesize.columns").get<std::string>();
        auto cm = ingest_casemix(path, {{column, ColumnKind::continuous, ""}});
        for (Eigen::Index i = 0; i < cm.n_rows(); ++i) m.values.push_back(cm.rows(i, 0));
      } else {
        fail("data.synthesize.columns.dist", "unknown distribution '" + dist + "'");
      }
      spec.columns.push_back(std::move(m));
    }
    auto n_rows = require(syn, "n_rows", "data.synthesize").get<std::int64_t>();
    return synthesize_casemix(spec, n_rows, mix_seed(master_seed, 0xDA7A));
  }
  fail("data.source", "must be 'csv' or 'synthesize'");
}

std::vector<double> parse_weights(const json& w, const CaseMix& casemix,
                                  const std::string& where) {
  std::vector<double> weights(static_cast<std::size_t>(casemix.n_cols()), 0.0);
  if (w.is_array()) {
    if (w.size() != weights.size())
      fail(where, "weight array length " + std::to_string(w.size()) + " != column count " +
                      std::to_string(weights.size()));
    for (std::size_t j = 0; j < weights.size(); ++j) weights[j] = w.at(j).get<double>();
  } else if (w.is_object()) {
    for (auto it = w.begin(); it != w.end(); ++it) {
      int idx = casemix.column_index(it.key());
      if (idx < 0) fail(where, "unknown column '" + it.key() + "'");
      weights[static_cast<std::size_t>(idx)] = it.value().get<double>();
    }
  } else {
    fail(where, "weights must be an array or name->value object");
  }
  return weights;
}

ModelKind parse_strategy_kind(const std::string& s) {
  if (s == "mle" || s == "logistic" || s == "unpenalized") return ModelKind::mle;
  if (s == "shrunk" || s == "heuristic_shrinkage") return ModelKind::shrunk;
  if (s == "ridge_cv" || s == "ridge") return ModelKind::ridge_cv;
  if (s == "lasso_cv" || s == "lasso") return ModelKind::lasso_cv;
  if (s == "bayes_ridge") return ModelKind::bayes_ridge;
  if (s == "bayes_lasso") return ModelKind::bayes_lasso;
  if (s == "forest" || s == "random_forest") return ModelKind::forest;
  throw ConfigError("unknown strategy kind '" + s + "'");
}

McmcConfig parse_mcmc(const json& m, const McmcConfig& defaults) {
  McmcConfig cfg = defaults;
  cfg.burn_in = m.value("burn_in", cfg.burn_in);
  cfg.thin = m.value("thin", cfg.thin);
  cfg.draws = m.value("draws", cfg.draws);
  if (m.contains("proposal")) {
    const auto& p = m.at("proposal");
    cfg.proposal.initial_step = p.value("initial_step", cfg.proposal.initial_step);
    cfg.proposal.adapt_window = p.value("adapt_window", cfg.proposal.adapt_window);
    cfg.proposal.target_acceptance = p.value("target_acceptance", cfg.proposal.target_acceptance);
  }
  cfg.validate();
  return cfg;
}

}  // namespace

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

ResolvedScenario resolve_scenario(const json& input, const CliOverrides& overrides) {
  ResolvedScenario out;
  json config = input;

  // Flag overrides land in the echoed document so a rerun reproduces them.
  if (overrides.n) config["scenario"]["n_values"] = json::array({*overrides.n});
  if (overrides.iterations) config["scenario"]["iterations"] = *overrides.iterations;
  if (overrides.seed) config["scenario"]["master_seed"] = *overrides.seed;
  if (overrides.out_dir) config["outputs"]["directory"] = *overrides.out_dir;

  const auto& scenario = require(config, "scenario", "(root)");
  ScenarioConfig& cfg = out.config;
  cfg.master_seed = require(scenario, "master_seed", "scenario").get<std::uint64_t>();
  cfg.iterations = scenario.value("iterations", 1000);
  if (!scenario.contains("n_values") || scenario.at("n_values").empty())
    fail("scenario.n_values", "at least one development sample size required");
  for (const auto& n : scenario.at("n_values")) cfg.n_values.push_back(n.get<std::int64_t>());
  if (scenario.contains("thresholds")) {
    cfg.thresholds.clear();
    for (const auto& t : scenario.at("thresholds")) cfg.thresholds.push_back(t.get<double>());
  }
  cfg.population_size = scenario.value("population_size", std::int64_t{100000});
  cfg.instability_sample = scenario.value("instability_sample", 2000);
  cfg.curves_emitted = scenario.value("curves_emitted", 200);
  if (scenario.contains("noise_variants"))
    for (const auto& v : scenario.at("noise_variants"))
      cfg.noise_variants.push_back(v.get<int>());

  // Data + master split; calibration targets the population part.
  out.master_casemix = build_master_casemix(require(config, "data", "(root)"), cfg.master_seed);
  auto [pop_casemix, dev_pool] =
      split_casemix(out.master_casemix, cfg.population_size, cfg.master_seed);
  (void)dev_pool;

  // Reference models: explicit (alpha/delta/weights) or calibrated.
  const auto& ref = require(config, "reference", "(root)");
  json models = ref.contains("models") ? ref.at("models") : json::array({ref});
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& rm = models.at(m);
    const std::string where = "reference.models[" + std::to_string(m) + "]";
    if (rm.contains("alpha") && rm.contains("delta")) {
      ReferenceModel model;
      model.alpha = rm.at("alpha").get<double>();
      model.delta = rm.at("delta").get<double>();
      model.weights = parse_weights(require(rm, "weights", where), pop_casemix, where);
      for (const auto& c : pop_casemix.columns) model.column_names.push_back(c.name);
      out.config.reference_models.push_back(std::move(model));
      out.calibration_reports.emplace_back();
    } else {
      auto weights = parse_weights(require(rm, "relative_weights", where), pop_casemix, where);
      double target_c = require(rm, "target_cstat", where).get<double>();
      double target_prev = require(rm, "target_prevalence", where).get<double>();
      double tol = rm.value("tol", 0.005);
      int max_iter = rm.value("max_iter", 60);
      CalibrationReport report;
      auto model =
          calibrate_reference(weights, pop_casemix, target_c, target_prev, tol, max_iter, &report);
      out.config.reference_models.push_back(std::move(model));
      out.calibration_reports.push_back(report);
    }
  }
  if (ref.contains("probabilities")) {
    for (const auto& p : ref.at("probabilities")) cfg.model_probs.push_back(p.get<double>());
  } else {
    cfg.model_probs.assign(cfg.reference_models.size(),
                           1.0 / static_cast<double>(cfg.reference_models.size()));
  }

  // Strategies.
  McmcConfig mcmc_defaults;
  if (config.contains("mcmc")) mcmc_defaults = parse_mcmc(config.at("mcmc"), McmcConfig{});
  for (const auto& sj : require(config, "strategies", "(root)")) {
    StrategyConfig s;
    s.kind = parse_strategy_kind(require(sj, "kind", "strategies").get<std::string>());
    s.label = sj.value("label", to_string(s.kind));
    s.mle_max_iter = sj.value("max_iter", 100);
    s.mle_tol = sj.value("tol", 1e-9);
    s.penalized.folds = sj.value("folds", 10);
    s.penalized.n_lambda = sj.value("n_lambda", 100);
    s.penalized.lambda_min_ratio = sj.value("lambda_min_ratio", 1e-4);
    s.prior.intercept_variance = sj.value("intercept_variance", 1e6);
    s.mcmc = sj.contains("mcmc") ? parse_mcmc(sj.at("mcmc"), mcmc_defaults) : mcmc_defaults;
    s.forest.n_trees = sj.value("n_trees", 100);
    s.forest.max_depth = sj.value("max_depth", 3);
    s.forest.mtry = sj.value("mtry", 0);
    s.forest.min_leaf = sj.value("min_leaf", 1);
    cfg.strategies.push_back(std::move(s));
  }

  // Criteria.
  if (config.contains("criteria")) {
    for (const auto& cj : config.at("criteria")) {
      Criterion c;
      c.metric = require(cj, "metric", "criteria").get<std::string>();
      if (cj.contains("lower")) c.lower = cj.at("lower").get<double>();
      if (cj.contains("upper")) c.upper = cj.at("upper").get<double>();
      c.target_prob = cj.value("probability", 0.9);
      cfg.criteria.push_back(std::move(c));
    }
  }

  // Outputs.
  if (config.contains("outputs")) {
    const auto& oj = config.at("outputs");
    out.outputs.directory = oj.value("directory", out.outputs.directory);
    out.outputs.emit_instability = oj.value("emit_instability", true);
    out.outputs.save_models = oj.value("save_models", false);
  }
  cfg.emit_instability = out.outputs.emit_instability;

  Warnings warnings;
  cfg.validate(&warnings);
  out.config_echo = std::move(config);
  return out;
}

CalibrationRun resolve_calibration(const json& input, const CliOverrides& overrides) {
  CalibrationRun out;
  json config = input;
  if (overrides.seed) config["scenario"]["master_seed"] = *overrides.seed;
  if (overrides.out_dir) config["outputs"]["directory"] = *overrides.out_dir;

  const auto& scenario = require(config, "scenario", "(root)");
  out.master_seed = require(scenario, "master_seed", "scenario").get<std::uint64_t>();
  auto population_size = scenario.value("population_size", std::int64_t{100000});

  if (config.contains("outputs")) {
    const auto& oj = config.at("outputs");
    out.outputs.directory = oj.value("directory", out.outputs.directory);
  }

  auto master = build_master_casemix(require(config, "data", "(root)"), out.master_seed);
  auto [pop_casemix, dev_pool] = split_casemix(master, population_size, out.master_seed);
  (void)dev_pool;

  const auto& ref = require(config, "reference", "(root)");
  const json& rm = ref.contains("models") ? ref.at("models").at(0) : ref;
  const std::string where = "reference";
  auto weights = parse_weights(require(rm, "relative_weights", where), pop_casemix, where);
  double target_c = require(rm, "target_cstat", where).get<double>();
  double target_prev = require(rm, "target_prevalence", where).get<double>();
  double tol = rm.value("tol", 0.005);
  int max_iter = rm.value("max_iter", 60);

  out.config_echo = config;
  try {
    out.model = calibrate_reference(weights, pop_casemix, target_c, target_prev, tol, max_iter,
                                    &out.report);
    out.converged = true;
  } catch (const ConvergenceError& e) {
    out.error = e.what();
    out.model.weights = weights;
    for (const auto& c : pop_casemix.columns) out.model.column_names.push_back(c.name);
    out.model.alpha = out.report.alpha;
    out.model.delta = out.report.delta;
  }
  return out;
}

}  // namespace samplan
