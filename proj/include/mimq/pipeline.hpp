#pragma once

#include "mimq/proper.hpp"
#include "mimq/regression.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mimq {

enum class LearnerMode { real_mim, boolean_mim, proper_ltf, proper_relu };

struct LearnerConfig {
  LearnerMode mode = LearnerMode::real_mim;
  double eps = 0.1;
  double delta = 0.1;

  // class parameters; unset values come from the target's class
  std::optional<double> M, L, gamma;
  std::optional<Index> k;

  std::optional<double> rho;
  std::optional<double> rho_constant;  // real: rho = c eps^2 (c = 1); boolean: rho = c eps / Gamma (c = 1/32)
  std::optional<double> eta;
  std::optional<int> degree;
  int degree_cap = 20;
  std::uint64_t max_features = 5000;
  Index outer_samples = 2000;
  std::optional<Index> inner_samples;  // unset: 1000
  bool inner_from_planner = false;
  std::optional<Index> regression_samples;  // unset: 4 x outer
  InfluenceEstimator estimator = InfluenceEstimator::paired;
  L1Method l1_method = L1Method::interior_point;

  // proper learners
  std::optional<double> resolution;
  double norm_bound = 1;
  std::optional<Index> erm_samples;
  double erm_constant = 1;
  std::uint64_t max_candidates = 5'000'000;
  bool allow_shortcut = true;
};

struct ExperimentConfig {
  LearnerConfig learner;
  TargetSpec target;
  CorruptionSpec corruption;
  std::uint64_t seed = 0;
  Index test_samples = 100000;
  std::uint64_t query_budget = BudgetLedger::kUnlimited;
  std::uint64_t sample_budget = BudgetLedger::kUnlimited;
  bool deterministic = false;
  Index baseline_degree = -1;  // negative: the pipeline's degree
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Parameters the learners run with, after defaults and overrides.
struct ResolvedParameters {
  ClassParameters cls;
  double rho = 0;
  double eta = 0;
  int degree = 0;
  double truncation = 0;  // real path label bound M' = sqrt(M / eps)
  Index outer_samples = 0;
  Index inner_samples = 0;
  Index regression_samples = 0;
  std::vector<std::string> warnings;
};

ResolvedParameters resolve_parameters(const LearnerConfig& cfg, const ClassParameters& cls, Index ambient_dim);
ProperConfig proper_config(const LearnerConfig& cfg);

struct BudgetPrediction {
  std::uint64_t queries = 0;
  std::uint64_t samples = 0;
};

// Exact ledger totals; proper learners need the selected dimension for the ERM sample count.
BudgetPrediction predict_budget(const ExperimentConfig& cfg, Index subspace_dim = 1);

struct MimResult {
  PolynomialHypothesis polynomial;
  InfluenceEstimate influence;
  SubspaceSelection selection;
  ResolvedParameters params;
  Matrix regression_points;
  Vector regression_labels;
  FitDiagnostics fit;
  double train_error = 0;
  std::vector<std::pair<std::string, double>> timings_ms;
};

MimResult learn_real_mim(LabelOracle& oracle, const LearnerConfig& cfg, const ClassParameters& cls,
                         RandomStream& rng);
MimResult learn_boolean_mim(LabelOracle& oracle, const LearnerConfig& cfg, const ClassParameters& cls,
                            RandomStream& rng);

// Regression stage alone, from a stored influence estimate and regression sample.
PolynomialHypothesis replay_regression(const InfluenceEstimate& influence, double eta, const Matrix& points,
                                       const Vector& labels, int degree, LabelMode mode,
                                       const L1SolverOptions& options = {});

struct ExperimentReport {
  std::string mode;
  std::uint64_t seed = 0;
  Index dim = 0;
  Index k = 0;
  double eps = 0;
  double delta = 0;
  double rho = 0;
  double eta = 0;
  int degree = 0;
  Index outer_samples = 0;
  Index inner_samples = 0;
  Index fit_samples = 0;
  std::uint64_t queries_used = 0;
  std::uint64_t samples_used = 0;
  BudgetPrediction predicted;
  Index dim_v = 0;
  Vector eigenvalues;
  Vector principal_angles;
  std::string loss;
  double train_error = 0;
  double test_error = 0;
  double opt_upper_bound = 0;
  double excess = 0;
  Index test_samples = 0;
  bool shortcut = false;
  std::uint64_t candidate_count = 0;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings_ms;
  nlohmann::json hypothesis;
  nlohmann::json config;
};

struct ExperimentArtifacts {
  std::optional<InfluenceEstimate> influence;
  Matrix fit_points;
  Vector fit_labels;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg, ExperimentArtifacts* artifacts = nullptr);

struct BaselineComparison {
  ExperimentReport pipeline;
  ExperimentReport baseline;
  bool separated = false;
};

// Ambient-space regression on as many samples as the pipeline used accesses.
BaselineComparison compare_baseline(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const ExperimentReport& report, bool include_timings);
std::string csv_header();
std::string csv_row(const ExperimentReport& report);

// Writes report.json, summary.csv, stage artifacts and, unless deterministic, timings.json into dir.
void write_outputs(const std::string& dir, const ExperimentReport& report, const ExperimentArtifacts* artifacts,
                   bool deterministic);

std::string to_string(LearnerMode m);
LearnerMode parse_learner_mode(const std::string& s);

struct FidelityCheck {
  double raw_error = 0;
  double smoothed_error = 0;
  double bound = 0;
};

// Error of h against raw labels and against Monte Carlo smoothed labels on n fresh points. Budget-exempt.
FidelityCheck smoothing_fidelity(const TargetSpec& target, const CorruptionSpec& corruption,
                                 const std::function<double(const Eigen::Ref<const Vector>&)>& h, LossMode loss,
                                 double rho, Index n, Index inner, double bound, RandomStream& rng);

}  // namespace mimq
