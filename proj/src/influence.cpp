#include "mimq/influence.hpp"

#include "mimq/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mimq {

InfluenceEstimate estimate_influence(LabelOracle& oracle, const SmoothingParams& params, Index outer_samples,
                                     RandomStream& rng, InfluenceEstimator estimator) {
  params.validate();
  if (outer_samples <= 0) throw ParameterError("estimate_influence: outer sample count must be positive");
  const Index d = oracle.ambient_dim();
  InfluenceEstimate est{Matrix::Zero(d, d), outer_samples, params, rng.seed(), estimator};
  for (Index i = 0; i < outer_samples; ++i) {
    const LabeledPoint p = oracle.draw_sample(rng);
    const Vector g1 = smoothed_gradient(oracle, p.x, params, rng);
    if (estimator == InfluenceEstimator::single) {
      est.matrix.noalias() += g1 * g1.transpose();
    } else {
      const Vector g2 = smoothed_gradient(oracle, p.x, params, rng);
      est.matrix.noalias() += 0.5 * (g1 * g2.transpose() + g2 * g1.transpose());
    }
  }
  est.matrix /= static_cast<double>(outer_samples);
  return est;
}

Index dimension_bound(double trace, double eta) {
  if (!(eta > 0)) throw ParameterError("dimension_bound: threshold must be positive");
  if (!(trace > 0)) return 0;
  return static_cast<Index>(std::floor(trace / eta));
}

SubspaceSelection top_subspace(const Matrix& influence, double eta) {
  if (influence.rows() != influence.cols()) throw DimensionError("top_subspace: matrix is not square");
  if (!(eta > 0)) throw ParameterError("top_subspace: threshold must be positive");
  if (!influence.allFinite()) throw NumericError("top_subspace: matrix has non-finite entries");
  const Index d = influence.rows();
  const Matrix sym = 0.5 * (influence + influence.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("top_subspace: eigensolver failed");

  Matrix vecs = es.eigenvectors();
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) {
      if (std::abs(vecs(i, j)) > 1e-12) {
        if (vecs(i, j) < 0) vecs.col(j) = -vecs.col(j);
        break;
      }
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector& vals = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double tol = 1e-12 * std::max({1.0, std::abs(vals(a)), std::abs(vals(b))});
    if (std::abs(vals(a) - vals(b)) > tol) return vals(a) > vals(b);
    for (Index i = 0; i < d; ++i)
      if (vecs(i, a) != vecs(i, b)) return vecs(i, a) > vecs(i, b);
    return false;
  });

  SubspaceSelection sel;
  sel.threshold = eta;
  sel.eigenvalues.resize(d);
  sel.eigenvectors.resize(d, d);
  for (Index j = 0; j < d; ++j) {
    sel.eigenvalues(j) = vals(order[static_cast<std::size_t>(j)]);
    sel.eigenvectors.col(j) = vecs.col(order[static_cast<std::size_t>(j)]);
  }
  if (d > 0 && sel.eigenvalues(d - 1) < -1e-8)
    sel.warnings.push_back("influence estimate has negative eigenvalue " + std::to_string(sel.eigenvalues(d - 1)));

  Index r = 0;
  while (r < d && sel.eigenvalues(r) >= eta) ++r;
  sel.bound = dimension_bound(sym.trace(), eta);
  if (r > sel.bound) {
    sel.warnings.push_back("retained dimension " + std::to_string(r) + " capped at trace bound " +
                           std::to_string(sel.bound));
    r = sel.bound;
  }
  sel.subspace = Subspace(Matrix(sel.eigenvectors.leftCols(r)), Vector(sel.eigenvalues.head(r)));
  return sel;
}

double select_threshold(ThresholdMode mode, double eps, Index k, double label_bound) {
  if (!(eps > 0)) throw ParameterError("select_threshold: eps must be positive");
  if (k <= 0) throw ParameterError("select_threshold: k must be positive");
  const double kk = static_cast<double>(k);
  if (mode == ThresholdMode::boolean) return eps * eps / (32 * kk);
  if (!(label_bound > 0)) throw ParameterError("select_threshold: M must be positive");
  return eps * eps / (32 * kk * label_bound);
}

std::string to_string(InfluenceEstimator e) { return e == InfluenceEstimator::paired ? "paired" : "single"; }

void to_json(nlohmann::json& j, const SmoothingParams& p) {
  j = {{"rho", p.rho}, {"inner_samples", p.inner_samples}, {"delta", p.delta}, {"label_bound", p.label_bound}};
}

void from_json(const nlohmann::json& j, SmoothingParams& p) {
  JsonReader r(j, "params");
  p.rho = r.required<double>("rho");
  p.inner_samples = r.required<Index>("inner_samples");
  p.delta = r.optional<double>("delta", p.delta);
  p.label_bound = r.optional<double>("label_bound", p.label_bound);
}

void to_json(nlohmann::json& j, const InfluenceEstimate& e) {
  j = {{"matrix", matrix_to_json(e.matrix)},
       {"outer_samples", e.outer_samples},
       {"params", e.params},
       {"seed", e.seed},
       {"estimator", to_string(e.estimator)}};
}

void from_json(const nlohmann::json& j, InfluenceEstimate& e) {
  JsonReader r(j, "");
  e.matrix = matrix_from_json(r.child("matrix"), "matrix");
  if (e.matrix.rows() != e.matrix.cols()) throw ConfigError("matrix", "influence matrix must be square");
  e.outer_samples = r.required<Index>("outer_samples");
  e.params = r.required<SmoothingParams>("params");
  e.seed = r.optional<std::uint64_t>("seed", 0);
  const std::string est = r.optional<std::string>("estimator", "paired");
  if (est == "paired")
    e.estimator = InfluenceEstimator::paired;
  else if (est == "single")
    e.estimator = InfluenceEstimator::single;
  else
    throw ConfigError("estimator", "expected 'paired' or 'single'");
}

}  // namespace mimq
