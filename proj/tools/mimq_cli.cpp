#include "mimq/json_util.hpp"
#include "mimq/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool deterministic = false;
  std::optional<std::uint64_t> budget_queries;
  std::optional<std::uint64_t> budget_samples;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--out", o.out, "output directory for report.json, summary.csv and artifacts");
  cmd->add_flag("--deterministic", o.deterministic, "single-threaded, timing-free report");
  cmd->add_option("--budget-queries", o.budget_queries, "hard cap on label queries");
  cmd->add_option("--budget-samples", o.budget_samples, "hard cap on random samples");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw mimq::ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return j;
}

mimq::ExperimentConfig make_config(nlohmann::json j, const CommonOptions& o, std::optional<std::string> mode) {
  if (mode) j["mode"] = *mode;
  mimq::ExperimentConfig cfg = mimq::parse_config(j);
  if (o.seed) cfg.seed = *o.seed;
  if (o.budget_queries) cfg.query_budget = *o.budget_queries;
  if (o.budget_samples) cfg.sample_budget = *o.budget_samples;
  cfg.deterministic = cfg.deterministic || o.deterministic;
  return cfg;
}

void print_summary(const mimq::ExperimentReport& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << r.mode << "  d=" << r.dim << "  dimV=" << r.dim_v << "  queries=" << r.queries_used
            << "  samples=" << r.samples_used << "  train=" << r.train_error << "  test=" << r.test_error
            << "  opt_ub=" << r.opt_upper_bound << "  excess=" << r.excess << "\n";
}

int run_learn(const CommonOptions& o, const std::string& mode) {
  const mimq::ExperimentConfig cfg = make_config(read_json(o.config), o, mode);
  mimq::ExperimentArtifacts artifacts;
  const mimq::ExperimentReport report = mimq::run_experiment(cfg, &artifacts);
  print_summary(report);
  if (!o.out.empty()) mimq::write_outputs(o.out, report, &artifacts, cfg.deterministic);
  return 0;
}

int run_baseline(const CommonOptions& o) {
  const mimq::ExperimentConfig cfg = make_config(read_json(o.config), o, std::nullopt);
  const mimq::BaselineComparison cmp = mimq::compare_baseline(cfg);
  print_summary(cmp.pipeline);
  print_summary(cmp.baseline);
  std::cout << "separated=" << (cmp.separated ? "true" : "false") << "\n";
  if (!o.out.empty()) {
    mimq::write_outputs(o.out + "/pipeline", cmp.pipeline, nullptr, cfg.deterministic);
    mimq::write_outputs(o.out + "/baseline", cmp.baseline, nullptr, cfg.deterministic);
    nlohmann::json j = {{"separated", cmp.separated},
                        {"pipeline_excess", cmp.pipeline.excess},
                        {"baseline_excess", cmp.baseline.excess},
                        {"eps", cfg.learner.eps}};
    std::ofstream(o.out + "/comparison.json") << j.dump(2) << "\n";
  }
  return 0;
}

// "sweep": {"eps": [...], "seeds": [...]} expands into one run per pair
int run_sweep(const CommonOptions& o) {
  const nlohmann::json base = read_json(o.config);
  const mimq::JsonReader top(base, "");
  std::vector<double> eps_values;
  std::vector<std::uint64_t> seeds;
  if (top.has("sweep")) {
    const mimq::JsonReader sr = top.object("sweep");
    eps_values = sr.optional<std::vector<double>>("eps", {});
    seeds = sr.optional<std::vector<std::uint64_t>>("seeds", {});
  }
  if (eps_values.empty()) eps_values.push_back(base.at("learner").at("eps").get<double>());
  if (seeds.empty()) seeds.push_back(o.seed.value_or(base.value("seed", std::uint64_t{0})));

  std::ostringstream csv;
  csv << mimq::csv_header() << "\n";
  for (double eps : eps_values) {
    for (std::uint64_t seed : seeds) {
      nlohmann::json j = base;
      j.erase("sweep");
      j["learner"]["eps"] = eps;
      j["seed"] = seed;
      CommonOptions run = o;
      run.seed = seed;
      const mimq::ExperimentConfig cfg = make_config(j, run, std::nullopt);
      const mimq::ExperimentReport report = mimq::run_experiment(cfg);
      print_summary(report);
      csv << mimq::csv_row(report) << "\n";
      if (!o.out.empty()) {
        std::ostringstream sub;
        sub << o.out << "/eps_" << eps << "_seed_" << seed;
        mimq::write_outputs(sub.str(), report, nullptr, cfg.deterministic);
      }
    }
  }
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    std::ofstream(o.out + "/sweep.csv") << csv.str();
  } else {
    std::cout << csv.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-based learning of multi-index models under Gaussian marginals"};
  app.require_subcommand(1);
  CommonOptions opts;
  struct Sub {
    const char* name;
    const char* help;
    const char* mode;
  };
  const Sub learners[] = {{"learn-real", "robust learner for real-valued multi-index models", "real_mim"},
                          {"learn-boolean", "agnostic learner for Boolean multi-index models", "boolean_mim"},
                          {"learn-proper-ltf", "proper agnostic learner for halfspaces", "proper_ltf"},
                          {"learn-proper-relu", "proper robust learner for a single ReLU", "proper_relu"}};
  std::vector<std::pair<CLI::App*, std::string>> learn_cmds;
  for (const Sub& s : learners) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, opts);
    learn_cmds.emplace_back(cmd, s.mode);
  }
  CLI::App* baseline = app.add_subcommand("compare-baseline", "pipeline against ambient-space regression");
  add_common(baseline, opts);
  CLI::App* sweep = app.add_subcommand("sweep", "run a grid of eps and seeds, write sweep.csv");
  add_common(sweep, opts);

  CLI11_PARSE(app, argc, argv);
  try {
    for (const auto& [cmd, mode] : learn_cmds)
      if (cmd->parsed()) return run_learn(opts, mode);
    if (baseline->parsed()) return run_baseline(opts);
    if (sweep->parsed()) return run_sweep(opts);
  } catch (const mimq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mimq::BudgetError& e) {
    std::cerr << "budget error (" << e.kind() << ", stage " << e.stage() << "): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
