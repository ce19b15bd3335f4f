#pragma once

#include "mimq/influence.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mimq {

enum class CandidateKind { ltf, relu };

// ltf: sign(direction . x + bias);  relu: scale * ReLU(direction . x + bias)
struct Candidate {
  CandidateKind kind = CandidateKind::ltf;
  Vector direction;
  double bias = 0;
  double scale = 1;

  double operator()(const Eigen::Ref<const Vector>& x) const;
};

struct CoverSpec {
  Subspace subspace;
  double resolution = 0.1;
  double norm_bound = 1;
  double threshold_range = -1;  // negative: normal quantile at 1 - resolution / 4
  CandidateKind kind = CandidateKind::ltf;
  std::uint64_t max_candidates = 5'000'000;
};

inline constexpr double kCoverConstant = 8.0;

double default_threshold_range(double resolution);
double bias_step(double resolution);
std::vector<Vector> sphere_grid(Index dim, double pitch);
// exact grid size, or infinity once it exceeds limit
double sphere_grid_size(Index dim, double pitch, double limit = std::numeric_limits<double>::infinity());
Vector bias_grid(double range, double resolution);
Vector scale_grid(double resolution, double norm_bound);
// infinity when the count exceeds spec.max_candidates
double cover_size(const CoverSpec& spec);
std::vector<Candidate> build_cover(const CoverSpec& spec);

struct ErmResult {
  Index index = -1;
  double loss = 0;
};

ErmResult erm_select(const std::vector<Candidate>& candidates, const Matrix& points, const Vector& labels,
                     LossMode loss);

struct ProperConfig {
  double eps = 0.2;
  double delta = 0.1;
  std::optional<double> rho;
  std::optional<double> eta;
  std::optional<double> resolution;
  double norm_bound = 1;  // ReLU weight bound M
  Index outer_samples = 400;
  Index inner_samples = 2000;
  InfluenceEstimator estimator = InfluenceEstimator::paired;
  std::optional<Index> erm_samples;
  double erm_constant = 1;
  std::uint64_t max_candidates = 5'000'000;
  bool allow_shortcut = true;

  void validate() const;
};

struct ProperResult {
  Candidate candidate;
  Subspace subspace;
  bool shortcut = false;
  std::optional<InfluenceEstimate> influence;
  Vector eigenvalues;
  std::uint64_t candidate_count = 0;
  Index erm_samples = 0;
  double erm_loss = 0;
  double rho = 0;
  double eta = 0;
  std::vector<std::string> warnings;
};

Index erm_sample_count(CandidateKind kind, Index subspace_dim, const ProperConfig& cfg);

ProperResult proper_learn_ltf(LabelOracle& oracle, const ProperConfig& cfg, RandomStream& rng);
ProperResult proper_learn_relu(LabelOracle& oracle, const ProperConfig& cfg, RandomStream& rng);

std::string to_string(CandidateKind k);
void to_json(nlohmann::json& j, const Candidate& c);
void from_json(const nlohmann::json& j, Candidate& c);

}  // namespace mimq
