#pragma once

#include "mimq/smoothing.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mimq {

enum class InfluenceEstimator { paired, single };

struct InfluenceEstimate {
  Matrix matrix;
  Index outer_samples = 0;
  SmoothingParams params;
  std::uint64_t seed = 0;
  InfluenceEstimator estimator = InfluenceEstimator::paired;
};

// paired: sym(g1 g2^T) from two independent gradient estimates per point (unbiased);
// single: g g^T from one estimate (biased upward by the estimator covariance).
InfluenceEstimate estimate_influence(LabelOracle& oracle, const SmoothingParams& params, Index outer_samples,
                                     RandomStream& rng, InfluenceEstimator estimator = InfluenceEstimator::paired);

struct SubspaceSelection {
  Subspace subspace;
  double threshold = 0;
  Vector eigenvalues;   // all, descending
  Matrix eigenvectors;  // matching columns, canonical signs
  Index bound = 0;      // floor(trace / threshold)
  std::vector<std::string> warnings;
};

SubspaceSelection top_subspace(const Matrix& influence, double eta);
inline SubspaceSelection top_subspace(const InfluenceEstimate& est, double eta) { return top_subspace(est.matrix, eta); }

Index dimension_bound(double trace, double eta);

enum class ThresholdMode { real, boolean };
// real: eps^2 / (32 k M); boolean: eps^2 / (32 k)
double select_threshold(ThresholdMode mode, double eps, Index k, double label_bound = 1.0);

std::string to_string(InfluenceEstimator e);

void to_json(nlohmann::json& j, const InfluenceEstimate& e);
void from_json(const nlohmann::json& j, InfluenceEstimate& e);
void to_json(nlohmann::json& j, const SmoothingParams& p);
void from_json(const nlohmann::json& j, SmoothingParams& p);

}  // namespace mimq
