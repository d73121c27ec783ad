#include "samplan/outputs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "samplan/strategies.hpp"

namespace samplan {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_csv_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot hash missing file: " + path);
  std::uint64_t h = 0xCBF29CE484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ull;
    }
    if (!in) break;
  }
  char out[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) out[i] = hex[(h >> (60 - 4 * i)) & 0xF];
  out[16] = '\0';
  return std::string(out);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings on all platforms
  if (!out) throw ConfigError("cannot write output file: " + path);
  return out;
}

std::string variant_suffix(const std::string& variant) {
  return variant == "base" ? "" : "_" + variant;
}

// Per-draw metric rows in the spec'd long format.
void write_draws_csv(std::ofstream& out, const MetricDraws& draws, bool with_header) {
  if (with_header) out << "n,strategy,iteration,metric,value\n";
  const std::vector<std::string> scalar = {"c_stat",        "c_degradation", "cal_slope",
                                           "cal_intercept", "mape",          "rmspe",
                                           "r2_cox_snell",  "r2_nagelkerke"};
  for (std::size_t s = 0; s < draws.strategy_labels.size(); ++s) {
    const auto& label = draws.strategy_labels[s];
    for (std::size_t k = 0; k < draws.per_strategy[s].size(); ++k) {
      const auto& v = draws.per_strategy[s][k].overall;
      auto row = [&](const std::string& metric, double value) {
        out << draws.n << ',' << label << ',' << k << ',' << metric << ','
            << format_csv_double(value) << '\n';
      };
      row("c_stat", v.c_stat);
      row("c_degradation", v.c_degradation);
      row("cal_slope", v.cal_slope);
      row("cal_intercept", v.cal_intercept);
      row("mape", v.mape);
      row("rmspe", v.rmspe);
      row("r2_cox_snell", v.r2_cox_snell);
      row("r2_nagelkerke", v.r2_nagelkerke);
      for (std::size_t t = 0; t < draws.thresholds.size(); ++t) {
        std::string suffix = "@" + format_csv_double(draws.thresholds[t]);
        if (t >= v.utility.size()) break;
        const auto& u = v.utility[t];
        row("nb_model" + suffix, u.nb_model);
        row("nb_max" + suffix, u.nb_max);
        row("nb_treat_all" + suffix, u.nb_treat_all);
        row("nb_treat_none" + suffix, u.nb_treat_none);
        row("rvsi_model" + suffix, u.rvsi_model);
        row("rvsi_winner" + suffix, u.rvsi_winner);
        row("winner" + suffix, u.winner < 0 ? std::nan("") : static_cast<double>(u.winner));
      }
    }
  }
}

void write_instability_files(const std::string& directory, const std::string& suffix,
                             const ScenarioResult& run, std::vector<std::string>& files) {
  const auto& inst = run.instability;
  if (inst.strategies.empty()) return;
  const auto n = run.draws.n;

  {
    std::string path = directory + "/instability_predictions" + suffix + ".csv";
    auto out = open_out(path);
    out << "n,strategy,individual_id,true_risk,draw_id,estimated_risk\n";
    for (const auto& ps : inst.strategies) {
      for (std::size_t d = 0; d < ps.per_draw_risks.size(); ++d) {
        const auto& truth = inst.tracked_truths[static_cast<std::size_t>(inst.draw_model_index[d])];
        for (std::size_t i = 0; i < ps.per_draw_risks[d].size(); ++i)
          out << n << ',' << ps.strategy << ',' << inst.tracked_ids[i] << ','
              << format_csv_double(truth[i]) << ',' << d << ','
              << format_csv_double(ps.per_draw_risks[d][i]) << '\n';
      }
    }
    files.push_back(path);
  }

  {
    std::string path = directory + "/instability_curves" + suffix + ".csv";
    auto out = open_out(path);
    out << "n,strategy,draw_id,estimated_risk,observed\n";
    for (const auto& ps : inst.strategies)
      for (std::size_t c = 0; c < ps.curves.size(); ++c)
        for (std::size_t g = 0; g < ps.curves[c].grid.size(); ++g)
          out << n << ',' << ps.strategy << ',' << ps.curve_draw_ids[c] << ','
              << format_csv_double(ps.curves[c].grid[g]) << ','
              << format_csv_double(ps.curves[c].observed[g]) << '\n';
    files.push_back(path);
  }

  {
    std::string path = directory + "/individual_uncertainty" + suffix + ".csv";
    auto out = open_out(path);
    out << "n,strategy,individual_id,true_risk";
    for (double t : run.draws.thresholds) out << ",pmisclass@" << format_csv_double(t);
    out << ",width95\n";
    for (const auto& ps : inst.strategies) {
      for (std::size_t i = 0; i < ps.widths.size(); ++i) {
        out << n << ',' << ps.strategy << ',' << inst.tracked_ids[i] << ','
            << format_csv_double(inst.tracked_truths[0][i]);
        for (std::size_t t = 0; t < ps.misclass.size(); ++t)
          out << ',' << format_csv_double(ps.misclass[t][i]);
        out << ',' << format_csv_double(ps.widths[i]) << '\n';
      }
    }
    files.push_back(path);
  }
}

}  // namespace

json summary_to_json(const SummaryReport& report) {
  json blocks = json::array();
  for (const auto& b : report.blocks) {
    json metrics;
    for (const auto& [name, s] : b.metrics) {
      json m;
      m["mean"] = std::isnan(s.mean) ? json(nullptr) : json(s.mean);
      m["p2_5"] = std::isnan(s.p2_5) ? json(nullptr) : json(s.p2_5);
      m["p97_5"] = std::isnan(s.p97_5) ? json(nullptr) : json(s.p97_5);
      m["n_missing"] = s.n_missing;
      m["n_used"] = s.n_used;
      metrics[name] = std::move(m);
    }
    json criteria;
    for (const auto& [id, prob] : b.criterion_probs)
      criteria[id] = std::isnan(prob) ? json(nullptr) : json(prob);
    blocks.push_back({{"n", b.n},
                      {"variant", b.variant},
                      {"strategy", b.strategy},
                      {"threshold", b.threshold},
                      {"subgroup", b.subgroup},
                      {"metrics", std::move(metrics)},
                      {"criterion_probabilities", std::move(criteria)}});
  }
  json j;
  j["blocks"] = std::move(blocks);
  j["master_seed"] = report.master_seed;
  j["iterations"] = report.iterations;
  j["warnings"] = report.warnings;
  return j;
}

std::vector<std::string> write_run_outputs(const std::string& directory,
                                           const ResolvedScenario& resolved,
                                           const std::vector<ScenarioResult>& runs,
                                           const std::vector<SweepVerdict>* verdicts,
                                           const std::string& command) {
  fs::create_directories(directory);
  std::vector<std::string> files;

  // summary.csv covers every (n, variant) block.
  {
    std::string path = directory + "/summary.csv";
    auto out = open_out(path);
    out << "n,variant,strategy,threshold,subgroup,metric,mean,p2_5,p97_5,n_missing,n_used";
    for (std::size_t c = 0; c < resolved.config.criteria.size(); ++c)
      out << ",crit_" << (c + 1) << "_prob";
    out << '\n';
    for (const auto& run : runs) {
      for (const auto& b : run.summary.blocks) {
        for (const auto& [name, s] : b.metrics) {
          out << b.n << ',' << b.variant << ',' << b.strategy << ','
              << format_csv_double(b.threshold) << ',' << b.subgroup << ',' << name << ','
              << format_csv_double(s.mean) << ',' << format_csv_double(s.p2_5) << ','
              << format_csv_double(s.p97_5) << ',' << s.n_missing << ',' << s.n_used;
          for (const auto& [id, prob] : b.criterion_probs) out << ',' << format_csv_double(prob);
          out << '\n';
        }
      }
    }
    files.push_back(path);
  }

  // Per-variant draws + instability files.
  std::vector<std::string> variants;
  for (const auto& run : runs)
    if (std::find(variants.begin(), variants.end(), run.draws.variant) == variants.end())
      variants.push_back(run.draws.variant);
  for (const auto& variant : variants) {
    std::string suffix = variant_suffix(variant);
    std::string path = directory + "/draws" + suffix + ".csv";
    auto out = open_out(path);
    bool first = true;
    for (const auto& run : runs) {
      if (run.draws.variant != variant) continue;
      write_draws_csv(out, run.draws, first);
      first = false;
    }
    files.push_back(path);
  }
  for (const auto& run : runs) {
    std::string suffix = variant_suffix(run.draws.variant);
    if (runs.size() > 1) suffix += "_n" + std::to_string(run.draws.n);
    write_instability_files(directory, suffix, run, files);
  }

  // report.json: config echo, seed provenance, all summaries, verdicts.
  {
    std::string path = directory + "/report.json";
    json j;
    j["tool"] = {{"name", "samplan"}, {"version", kVersion}};
    j["command"] = command;
    j["config"] = resolved.config_echo;
    j["seed_provenance"] = {
        {"master_seed", resolved.config.master_seed},
        {"scheme",
         "philox4x32-10 streams keyed by mix(master_seed, iteration) with role-tagged stream ids"},
    };
    json cal = json::array();
    for (const auto& r : resolved.calibration_reports)
      cal.push_back({{"achieved_cstat", r.achieved_cstat},
                     {"achieved_prevalence", r.achieved_prevalence},
                     {"alpha", r.alpha},
                     {"delta", r.delta},
                     {"outer_iterations", r.outer_iterations},
                     {"inner_iterations", r.inner_iterations},
                     {"converged", r.converged}});
    j["calibration"] = std::move(cal);
    json summaries = json::array();
    for (const auto& run : runs) {
      json s = summary_to_json(run.summary);
      s["n"] = run.draws.n;
      s["variant"] = run.draws.variant;
      summaries.push_back(std::move(s));
    }
    j["summaries"] = std::move(summaries);
    json crit = json::array();
    for (std::size_t c = 0; c < resolved.config.criteria.size(); ++c)
      crit.push_back({{"column", "crit_" + std::to_string(c + 1) + "_prob"},
                      {"id", resolved.config.criteria[c].id()},
                      {"target_probability", resolved.config.criteria[c].target_prob}});
    j["criteria"] = std::move(crit);
    if (verdicts) {
      json v = json::array();
      for (const auto& verdict : *verdicts) {
        json pass;
        for (const auto& [n, ok] : verdict.pass_by_n) pass[std::to_string(n)] = ok;
        v.push_back({{"variant", verdict.variant},
                     {"strategy", verdict.strategy},
                     {"minimal_n", verdict.minimal_n},
                     {"pass_by_n", std::move(pass)}});
      }
      j["verdicts"] = std::move(v);
    }
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    files.push_back(path);
  }

  // Audit copies of iteration 0's fitted models.
  if (resolved.outputs.save_models) {
    std::string path = directory + "/models.json";
    json models = json::array();
    for (const auto& run : runs) {
      for (std::size_t s = 0; s < run.first_models.size(); ++s) {
        if (!run.first_models[s]) continue;
        json m = model_to_json(*run.first_models[s]);
        m["n"] = run.draws.n;
        m["variant"] = run.draws.variant;
        m["strategy"] = run.draws.strategy_labels[s];
        models.push_back(std::move(m));
      }
    }
    auto out = open_out(path);
    out << models.dump(2) << '\n';
    files.push_back(path);
  }

  return files;
}

std::string write_verdict(const std::string& directory, const ScenarioConfig& config,
                          const std::vector<SweepVerdict>& verdicts) {
  fs::create_directories(directory);
  std::string path = directory + "/verdict.json";
  json j;
  if (config.criteria.empty()) {
    j["status"] = "no criteria configured";
  } else {
    json v = json::array();
    for (const auto& verdict : verdicts) {
      json pass;
      for (const auto& [n, ok] : verdict.pass_by_n) pass[std::to_string(n)] = ok;
      v.push_back({{"variant", verdict.variant},
                   {"strategy", verdict.strategy},
                   {"minimal_n",
                    verdict.minimal_n < 0 ? json("none") : json(verdict.minimal_n)},
                   {"pass_by_n", std::move(pass)}});
    }
    j["verdicts"] = std::move(v);
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  return path;
}

std::string write_manifest(const std::string& directory, const json& config_echo,
                           std::uint64_t master_seed, const std::vector<std::string>& artifacts,
                           const std::vector<StageTiming>& timings, const std::string& command) {
  fs::create_directories(directory);
  std::string path = directory + "/manifest.json";
  json j;
  j["tool"] = {{"name", "samplan"}, {"version", kVersion}};
  j["command"] = command;
  j["master_seed"] = master_seed;
  j["config"] = config_echo;
  json arts = json::array();
  for (const auto& a : artifacts) {
    arts.push_back({{"path", fs::path(a).filename().string()},
                    {"bytes", fs::file_size(a)},
                    {"fnv1a64", file_hash_hex(a)}});
  }
  j["artifacts"] = std::move(arts);
  json times = json::array();
  for (const auto& t : timings) times.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  j["timings"] = std::move(times);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  return path;
}

}  // namespace samplan
