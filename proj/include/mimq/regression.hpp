#pragma once

#include "mimq/l1_solver.hpp"
#include "mimq/oracle.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mimq {

class PolynomialHypothesis {
 public:
  PolynomialHypothesis() = default;
  PolynomialHypothesis(Subspace subspace, int degree, std::vector<MultiIndex> indices, Vector coefficients);

  static PolynomialHypothesis constant(Subspace subspace, double value);

  double operator()(const Eigen::Ref<const Vector>& x) const;
  Vector evaluate_rows(const Matrix& points) const;
  double coefficient(const MultiIndex& index) const;

  const Subspace& subspace() const noexcept { return subspace_; }
  int degree() const noexcept { return degree_; }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  const Vector& coefficients() const noexcept { return coefficients_; }

 private:
  Subspace subspace_;
  int degree_ = 0;
  std::vector<MultiIndex> indices_;
  Vector coefficients_;
  HermiteTable<double> table_{0};
};

class BooleanHypothesis {
 public:
  BooleanHypothesis() = default;
  explicit BooleanHypothesis(PolynomialHypothesis poly) : poly_(std::move(poly)) {}

  double operator()(const Eigen::Ref<const Vector>& x) const { return sign_of(poly_(x)); }
  Vector evaluate_rows(const Matrix& points) const;
  const PolynomialHypothesis& polynomial() const noexcept { return poly_; }

 private:
  PolynomialHypothesis poly_;
};

struct FitDiagnostics {
  std::vector<std::string> warnings;
  Index feature_count = 0;
  double objective = 0;
  double dual_objective = 0;
  int iterations = 0;
  std::vector<std::string> solver_log;
};

// n x F matrix of H_I(coords_i), indices in graded-lex order
Matrix hermite_features(const Matrix& coords, const std::vector<MultiIndex>& indices, int degree);

inline constexpr double kRidge = 1e-8;
inline constexpr Index kMaxFitFeatures = 20000;

// Least squares over Hermite polynomials of degree <= m in the coordinates of V.
// Normal equations (Phi^T Phi / n + kRidge I) c = Phi^T y / n.
PolynomialHypothesis l2_fit(const Matrix& points, const Vector& labels, const Subspace& v, int degree,
                            FitDiagnostics* diag = nullptr);

PolynomialHypothesis l1_fit_polynomial(const Matrix& points, const Vector& labels, const Subspace& v, int degree,
                                       const L1SolverOptions& options = {}, FitDiagnostics* diag = nullptr);

inline BooleanHypothesis l1_fit(const Matrix& points, const Vector& labels, const Subspace& v, int degree,
                                const L1SolverOptions& options = {}, FitDiagnostics* diag = nullptr) {
  return BooleanHypothesis(l1_fit_polynomial(points, labels, v, degree, options, diag));
}

// real: ceil(L / eps^2); boolean: ceil(Gamma^2 / eps^4); clamped to cap
int degree_for(LabelMode mode, double smoothness, double eps, int cap = 20,
               std::vector<std::string>* warnings = nullptr);

// largest degree <= m whose feature count in dimension r stays within max_features
int degree_within_features(Index r, int m, std::uint64_t max_features);

double empirical_error(const PolynomialHypothesis& h, const Matrix& points, const Vector& labels, LossMode mode);
double empirical_error(const BooleanHypothesis& h, const Matrix& points, const Vector& labels, LossMode mode);

void to_json(nlohmann::json& j, const PolynomialHypothesis& h);
void from_json(const nlohmann::json& j, PolynomialHypothesis& h);
void to_json(nlohmann::json& j, const Subspace& s);
Subspace subspace_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace mimq
