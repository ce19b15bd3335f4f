#include "mimq/regression.hpp"

#include "mimq/json_util.hpp"

#include <algorithm>
#include <cmath>

namespace mimq {

namespace {

void fill_tables(const HermiteTable<double>& table, const Eigen::Ref<const Vector>& coords, int degree, Matrix& h) {
  h.resize(degree + 1, coords.size());
  for (Index j = 0; j < coords.size(); ++j) table.fill(coords(j), h.col(j).data(), degree + 1);
}

double feature_value(const Matrix& h, const MultiIndex& index) {
  double p = 1;
  for (std::size_t j = 0; j < index.dim(); ++j)
    if (index[j]) p *= h(index[j], static_cast<Index>(j));
  return p;
}

Matrix project_points(const Subspace& v, const Matrix& points) {
  if (points.cols() != v.ambient_dim())
    throw DimensionError("regression: point dimension " + std::to_string(points.cols()) +
                         " does not match ambient dimension " + std::to_string(v.ambient_dim()));
  return points * v.basis();
}

void check_data(const Matrix& points, const Vector& labels) {
  if (points.rows() != labels.size()) throw DimensionError("regression: point and label counts differ");
  if (points.rows() == 0) throw ParameterError("regression: no data points");
  if (!points.allFinite() || !labels.allFinite()) throw NumericError("regression: non-finite data");
}

std::vector<MultiIndex> fit_indices(Index r, int degree) {
  if (degree < 0) throw ParameterError("regression: negative degree");
  const std::uint64_t count = multi_index_count(r, degree);
  if (count > static_cast<std::uint64_t>(kMaxFitFeatures))
    throw SizeError("regression: " + std::to_string(count) + " features exceed the limit of " +
                    std::to_string(kMaxFitFeatures));
  return enumerate_multi_indices(r, degree);
}

void feature_warning(Index features, Index points, FitDiagnostics* diag) {
  if (diag) diag->feature_count = features;
  if (diag && features > points)
    diag->warnings.push_back("feature count " + std::to_string(features) + " exceeds sample count " +
                             std::to_string(points));
}

}  // namespace

PolynomialHypothesis::PolynomialHypothesis(Subspace subspace, int degree, std::vector<MultiIndex> indices,
                                           Vector coefficients)
    : subspace_(std::move(subspace)),
      degree_(degree),
      indices_(std::move(indices)),
      coefficients_(std::move(coefficients)),
      table_(std::max(degree, 0)) {
  if (degree < 0) throw ParameterError("PolynomialHypothesis: negative degree");
  if (static_cast<Index>(indices_.size()) != coefficients_.size())
    throw DimensionError("PolynomialHypothesis: index and coefficient counts differ");
  for (const MultiIndex& idx : indices_) {
    if (static_cast<Index>(idx.dim()) != subspace_.dim())
      throw DimensionError("PolynomialHypothesis: index dimension does not match subspace");
    if (idx.total_degree() > degree) throw ParameterError("PolynomialHypothesis: index exceeds degree");
  }
  if (!std::is_sorted(indices_.begin(), indices_.end()))
    throw ParameterError("PolynomialHypothesis: indices must be in graded-lex order");
}

PolynomialHypothesis PolynomialHypothesis::constant(Subspace subspace, double value) {
  const Index r = subspace.dim();
  return PolynomialHypothesis(std::move(subspace), 0, {MultiIndex(std::vector<int>(static_cast<std::size_t>(r), 0))},
                              Vector::Constant(1, value));
}

double PolynomialHypothesis::operator()(const Eigen::Ref<const Vector>& x) const {
  const Vector coords = project(subspace_, x);
  Matrix h;
  fill_tables(table_, coords, degree_, h);
  double acc = 0;
  for (std::size_t i = 0; i < indices_.size(); ++i)
    acc += coefficients_(static_cast<Index>(i)) * feature_value(h, indices_[i]);
  return acc;
}

Vector PolynomialHypothesis::evaluate_rows(const Matrix& points) const {
  const Matrix coords = project_points(subspace_, points);
  Vector out(points.rows());
  constexpr Index kBlock = 2048;
  for (Index start = 0; start < coords.rows(); start += kBlock) {
    const Index len = std::min(kBlock, coords.rows() - start);
    out.segment(start, len) = hermite_features(coords.middleRows(start, len), indices_, degree_) * coefficients_;
  }
  return out;
}

double PolynomialHypothesis::coefficient(const MultiIndex& index) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
  if (it == indices_.end() || !(*it == index)) return 0.0;
  return coefficients_(it - indices_.begin());
}

Vector BooleanHypothesis::evaluate_rows(const Matrix& points) const {
  return poly_.evaluate_rows(points).unaryExpr([](double t) { return sign_of(t); });
}

Matrix hermite_features(const Matrix& coords, const std::vector<MultiIndex>& indices, int degree) {
  const HermiteTable<double> table(std::max(degree, 0));
  Matrix phi(coords.rows(), static_cast<Index>(indices.size()));
  Matrix h;
  for (Index i = 0; i < coords.rows(); ++i) {
    fill_tables(table, coords.row(i).transpose(), degree, h);
    for (std::size_t f = 0; f < indices.size(); ++f) phi(i, static_cast<Index>(f)) = feature_value(h, indices[f]);
  }
  return phi;
}

PolynomialHypothesis l2_fit(const Matrix& points, const Vector& labels, const Subspace& v, int degree,
                            FitDiagnostics* diag) {
  check_data(points, labels);
  std::vector<MultiIndex> indices = fit_indices(v.dim(), degree);
  const Matrix coords = project_points(v, points);
  const Matrix phi = hermite_features(coords, indices, degree);
  feature_warning(phi.cols(), phi.rows(), diag);
  const double n = static_cast<double>(phi.rows());
  Matrix gram = Matrix::Zero(phi.cols(), phi.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose(), 1.0 / n);
  gram.diagonal().array() += kRidge;
  const Vector rhs = phi.transpose() * labels / n;
  Eigen::LLT<Matrix> llt(gram);
  Vector c;
  if (llt.info() == Eigen::Success) {
    c = llt.solve(rhs);
  } else {
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw NumericError("l2_fit: normal equations are singular beyond ridge");
    c = ldlt.solve(rhs);
  }
  if (!c.allFinite()) throw NumericError("l2_fit: solution is not finite");
  if (diag) diag->objective = (phi * c - labels).squaredNorm() / n;
  return PolynomialHypothesis(v, degree, std::move(indices), std::move(c));
}

PolynomialHypothesis l1_fit_polynomial(const Matrix& points, const Vector& labels, const Subspace& v, int degree,
                                       const L1SolverOptions& options, FitDiagnostics* diag) {
  check_data(points, labels);
  std::vector<MultiIndex> indices = fit_indices(v.dim(), degree);
  const Matrix coords = project_points(v, points);
  const Matrix phi = hermite_features(coords, indices, degree);
  feature_warning(phi.cols(), phi.rows(), diag);
  L1Solution sol = solve_l1(phi, labels, options);
  if (diag) {
    diag->objective = sol.objective;
    diag->dual_objective = sol.dual_objective;
    diag->iterations = sol.iterations;
    diag->solver_log = std::move(sol.log);
  }
  return PolynomialHypothesis(v, degree, std::move(indices), std::move(sol.coefficients));
}

int degree_for(LabelMode mode, double smoothness, double eps, int cap, std::vector<std::string>* warnings) {
  if (!(eps > 0 && eps < 1)) throw ParameterError("degree_for: eps must lie in (0, 1)");
  if (!(smoothness > 0)) throw ParameterError("degree_for: smoothness parameter must be positive");
  if (cap < 0) throw ParameterError("degree_for: negative cap");
  const double raw = mode == LabelMode::real ? smoothness / (eps * eps)
                                             : smoothness * smoothness / (eps * eps * eps * eps);
  const double m = std::max(1.0, std::ceil(raw - 1e-9));
  if (m > cap) {
    if (warnings)
      warnings->push_back("degree " + std::to_string(static_cast<long long>(std::min(m, 1e18))) +
                          " clamped to cap " + std::to_string(cap));
    return cap;
  }
  return static_cast<int>(m);
}

int degree_within_features(Index r, int m, std::uint64_t max_features) {
  while (m > 0) {
    try {
      if (multi_index_count(r, m) <= max_features) break;
    } catch (const SizeError&) {
    }
    --m;
  }
  return m;
}

double empirical_error(const PolynomialHypothesis& h, const Matrix& points, const Vector& labels, LossMode mode) {
  check_data(points, labels);
  const Vector pred = h.evaluate_rows(points);
  double acc = 0;
  for (Index i = 0; i < pred.size(); ++i) acc += loss_value(mode, pred(i), labels(i));
  return acc / static_cast<double>(pred.size());
}

double empirical_error(const BooleanHypothesis& h, const Matrix& points, const Vector& labels, LossMode mode) {
  check_data(points, labels);
  const Vector pred = h.evaluate_rows(points);
  double acc = 0;
  for (Index i = 0; i < pred.size(); ++i) acc += loss_value(mode, pred(i), labels(i));
  return acc / static_cast<double>(pred.size());
}

void to_json(nlohmann::json& j, const Subspace& s) {
  j = {{"ambient_dim", s.ambient_dim()}, {"basis", matrix_to_json(s.basis().transpose())}};
  if (s.eigenvalues().size()) j["eigenvalues"] = vector_to_json(s.eigenvalues());
}

Subspace subspace_from_json(const nlohmann::json& j, const std::string& path) {
  JsonReader r(j, path);
  const Index d = r.required<Index>("ambient_dim");
  const Matrix rows = matrix_from_json(r.child("basis"), r.path("basis"));
  Matrix basis = rows.size() ? Matrix(rows.transpose()) : Matrix(d, 0);
  if (basis.rows() != d) throw ConfigError(r.path("basis"), "basis vectors must have ambient dimension");
  Vector ev;
  if (r.has("eigenvalues")) ev = vector_from_json(r.child("eigenvalues"), r.path("eigenvalues"));
  try {
    return Subspace(std::move(basis), std::move(ev));
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

// basis rows are the subspace's orthonormal vectors
void to_json(nlohmann::json& j, const PolynomialHypothesis& h) {
  j = nlohmann::json::object();
  j["subspace"] = h.subspace();
  j["degree"] = h.degree();
  nlohmann::json coeffs = nlohmann::json::array();
  for (std::size_t i = 0; i < h.indices().size(); ++i)
    coeffs.push_back({h.indices()[i].entries(), h.coefficients()(static_cast<Index>(i))});
  j["coefficients"] = std::move(coeffs);
}

void from_json(const nlohmann::json& j, PolynomialHypothesis& h) {
  JsonReader r(j, "");
  Subspace s = subspace_from_json(r.child("subspace"), "subspace");
  const int degree = r.required<int>("degree");
  std::vector<MultiIndex> indices;
  std::vector<double> values;
  for (const auto& term : r.child("coefficients")) {
    if (!term.is_array() || term.size() != 2) throw ConfigError("coefficients", "terms are [index, value]");
    indices.emplace_back(term[0].get<std::vector<int>>());
    values.push_back(term[1].get<double>());
  }
  h = PolynomialHypothesis(std::move(s), degree, std::move(indices),
                           Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size())));
}

}  // namespace mimq
