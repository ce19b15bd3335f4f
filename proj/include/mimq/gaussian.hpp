#pragma once

#include "mimq/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mimq {

using Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Probabilists' Hermite polynomials scaled to unit norm under N(0,1).
template <typename Scalar>
class HermiteTable {
 public:
  explicit HermiteTable(int max_degree) : max_degree_(max_degree) {
    if (max_degree < 0) throw ParameterError("HermiteTable: max degree must be non-negative");
    root_.resize(static_cast<std::size_t>(max_degree) + 2);
    for (std::size_t i = 0; i < root_.size(); ++i) root_[i] = std::sqrt(static_cast<Scalar>(i));
  }

  int max_degree() const noexcept { return max_degree_; }

  // out[0..count) <- H_0(x), ..., H_{count-1}(x)
  void fill(Scalar x, Scalar* out, int count) const {
    if (count > max_degree_ + 1)
      throw std::out_of_range("HermiteTable: degree " + std::to_string(count - 1) + " exceeds table maximum " +
                              std::to_string(max_degree_));
    if (count <= 0) return;
    out[0] = Scalar(1);
    if (count > 1) out[1] = x;
    for (int i = 1; i + 1 < count; ++i) out[i + 1] = (x * out[i] - root_[i] * out[i - 1]) / root_[i + 1];
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values(Scalar x) const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(max_degree_ + 1);
    fill(x, out.data(), max_degree_ + 1);
    return out;
  }

  Scalar operator()(int degree, Scalar x) const {
    if (degree < 0 || degree > max_degree_)
      throw std::out_of_range("HermiteTable: degree " + std::to_string(degree) + " outside [0, " +
                              std::to_string(max_degree_) + "]");
    Scalar prev = Scalar(1);
    if (degree == 0) return prev;
    Scalar cur = x;
    for (int i = 1; i < degree; ++i) {
      const Scalar next = (x * cur - root_[i] * prev) / root_[i + 1];
      prev = cur;
      cur = next;
    }
    return cur;
  }

 private:
  int max_degree_;
  std::vector<Scalar> root_;
};

template <typename Scalar>
Scalar hermite_eval(const HermiteTable<Scalar>& table, int degree, Scalar x) {
  return table(degree, x);
}

class MultiIndex {
 public:
  MultiIndex() = default;

  explicit MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
    for (int e : entries_)
      if (e < 0) throw ParameterError("MultiIndex: entries must be non-negative");
    for (int e : entries_) total_ += e;
  }

  MultiIndex(std::initializer_list<int> entries) : MultiIndex(std::vector<int>(entries)) {}

  std::size_t dim() const noexcept { return entries_.size(); }
  int total_degree() const noexcept { return total_; }
  int operator[](std::size_t i) const { return entries_.at(i); }
  const std::vector<int>& entries() const noexcept { return entries_; }

  // graded lexicographic
  std::strong_ordering operator<=>(const MultiIndex& other) const {
    if (auto c = total_ <=> other.total_; c != 0) return c;
    return entries_ <=> other.entries_;
  }
  bool operator==(const MultiIndex& other) const = default;

 private:
  std::vector<int> entries_;
  int total_ = 0;
};

// Number of multi-indices of dimension dim with total degree <= degree, i.e. C(dim + degree, dim).
inline std::uint64_t multi_index_count(Index dim, int degree) {
  if (dim < 0 || degree < 0) throw ParameterError("multi_index_count: negative argument");
  unsigned __int128 c = 1;
  const auto k = static_cast<unsigned __int128>(std::min<Index>(dim, degree));
  const auto n = static_cast<unsigned __int128>(dim) + static_cast<unsigned __int128>(degree);
  for (unsigned __int128 i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > (static_cast<unsigned __int128>(1) << 62)) throw SizeError("multi_index_count: count overflows");
  }
  return static_cast<std::uint64_t>(c);
}

namespace detail {
inline void enumerate_exact(Index dim, int remaining, std::vector<int>& prefix, std::vector<MultiIndex>& out) {
  if (static_cast<Index>(prefix.size()) + 1 == dim) {
    prefix.push_back(remaining);
    out.emplace_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    prefix.push_back(e);
    enumerate_exact(dim, remaining - e, prefix, out);
    prefix.pop_back();
  }
}
}  // namespace detail

inline std::vector<MultiIndex> enumerate_multi_indices(Index dim, int max_degree,
                                                       std::uint64_t max_count = 50'000'000) {
  const std::uint64_t count = multi_index_count(dim, max_degree);
  if (count > max_count)
    throw SizeError("enumerate_multi_indices: " + std::to_string(count) + " indices exceed limit " +
                    std::to_string(max_count));
  std::vector<MultiIndex> out;
  out.reserve(count);
  if (dim == 0) {
    out.emplace_back();
    return out;
  }
  std::vector<int> prefix;
  for (int d = 0; d <= max_degree; ++d) detail::enumerate_exact(dim, d, prefix, out);
  return out;
}

template <typename Scalar, typename Derived>
Scalar hermite_multi_eval(const HermiteTable<Scalar>& table, const MultiIndex& index,
                          const Eigen::MatrixBase<Derived>& x) {
  if (static_cast<Index>(index.dim()) != x.size())
    throw DimensionError("hermite_multi_eval: index dimension " + std::to_string(index.dim()) +
                         " does not match point dimension " + std::to_string(x.size()));
  Scalar p = Scalar(1);
  for (std::size_t i = 0; i < index.dim(); ++i) {
    if (index[i] == 0) continue;
    p *= table(index[i], static_cast<Scalar>(x(static_cast<Index>(i))));
  }
  return p;
}

template <typename Scalar>
struct QuadratureRule {
  std::vector<Scalar> nodes;
  std::vector<Scalar> weights;
  // polynomials up to this degree are integrated exactly (piecewise across 0 when split_at_zero)
  int exactness_degree = -1;
  bool split_at_zero = false;

  std::size_t size() const noexcept { return nodes.size(); }

  static QuadratureRule gauss_hermite(int node_count = 200);
  static QuadratureRule half_range(int nodes_per_side = 100);
};

namespace detail {

template <typename Scalar>
void golub_welsch(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diag,
                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& offdiag, Scalar mass, std::vector<Scalar>& nodes,
                  std::vector<Scalar>& weights) {
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::SelfAdjointEigenSolver<MatrixS> es;
  es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericError("golub_welsch: tridiagonal eigensolver failed");
  const Index n = diag.size();
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    const Scalar v0 = es.eigenvectors()(0, i);
    weights[static_cast<std::size_t>(i)] = mass * v0 * v0;
  }
}

template <typename Scalar>
void gauss_legendre(int n, std::vector<Scalar>& nodes, std::vector<Scalar>& weights) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diag = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = Scalar(k) / std::sqrt(Scalar(4 * k * k - 1));
  golub_welsch<Scalar>(diag, off, Scalar(2), nodes, weights);
}

}  // namespace detail

template <typename Scalar>
QuadratureRule<Scalar> QuadratureRule<Scalar>::gauss_hermite(int node_count) {
  if (node_count < 1) throw ParameterError("gauss_hermite: node count must be positive");
  const int n = node_count;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diag = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(Scalar(k));
  QuadratureRule rule;
  detail::golub_welsch<Scalar>(diag, off, Scalar(1), rule.nodes, rule.weights);

  const HermiteTable<Scalar> table(n);
  std::vector<Scalar> h(static_cast<std::size_t>(n) + 1);
  const Scalar root_n = std::sqrt(Scalar(n));
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    Scalar x = rule.nodes[i];
    for (int it = 0; it < 3; ++it) {
      table.fill(x, h.data(), n + 1);
      x -= h[n] / (root_n * h[n - 1]);
    }
    table.fill(x, h.data(), n + 1);
    rule.nodes[i] = x;
    rule.weights[i] = Scalar(1) / (Scalar(n) * h[n - 1] * h[n - 1]);
  }
  for (std::size_t i = 0, j = rule.size() - 1; i < j; ++i, --j) {
    const Scalar x = (rule.nodes[j] - rule.nodes[i]) / 2;
    const Scalar w = (rule.weights[i] + rule.weights[j]) / 2;
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[rule.size() / 2] = Scalar(0);
  Scalar total = 0;
  for (Scalar w : rule.weights) total += w;
  for (Scalar& w : rule.weights) w /= total;
  rule.exactness_degree = 2 * n - 1;
  return rule;
}

// Gauss rule for the half-line measure phi(t) dt on [0, inf), mirrored onto (-inf, 0].
// Recurrence coefficients come from a discretized Stieltjes procedure on composite Gauss-Legendre panels.
template <typename Scalar>
QuadratureRule<Scalar> QuadratureRule<Scalar>::half_range(int nodes_per_side) {
  if (nodes_per_side < 1) throw ParameterError("half_range: node count must be positive");
  const int n = nodes_per_side;
  std::vector<Scalar> gl_x, gl_w;
  detail::gauss_legendre<Scalar>(24, gl_x, gl_w);
  const Scalar upper = 38, panel = Scalar(0.25);
  const int panels = static_cast<int>(upper / panel);
  const Scalar inv_sqrt_2pi = Scalar(1) / std::sqrt(2 * std::numbers::pi_v<Scalar>);

  const Index m = static_cast<Index>(panels) * static_cast<Index>(gl_x.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> t(m), lambda(m);
  Index pos = 0;
  for (int p = 0; p < panels; ++p) {
    const Scalar a = panel * p;
    for (std::size_t j = 0; j < gl_x.size(); ++j, ++pos) {
      t(pos) = a + panel * (gl_x[j] + 1) / 2;
      lambda(pos) = panel / 2 * gl_w[j] * inv_sqrt_2pi * std::exp(-t(pos) * t(pos) / 2);
    }
  }

  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  VectorS alpha(n), beta(std::max(n - 1, 0));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> q(m, n);
  q.col(0).setConstant(1 / std::sqrt(lambda.sum()));
  for (int k = 0; k < n; ++k) {
    alpha(k) = (lambda.array() * t.array() * q.col(k).array().square()).sum();
    if (k + 1 == n) break;
    VectorS r = (t.array() - alpha(k)) * q.col(k).array();
    if (k > 0) r -= beta(k - 1) * q.col(k - 1);
    for (int pass = 0; pass < 2; ++pass) {
      const VectorS c = q.leftCols(k + 1).transpose() * lambda.cwiseProduct(r);
      r -= q.leftCols(k + 1) * c;
    }
    const Scalar b = std::sqrt((lambda.array() * r.array().square()).sum());
    beta(k) = b;
    q.col(k + 1) = r / b;
  }

  std::vector<Scalar> x, w;
  detail::golub_welsch<Scalar>(alpha, beta, Scalar(0.5), x, w);
  // Christoffel weights keep relative accuracy in the tails
  for (std::size_t i = 0; i < x.size(); ++i) {
    Scalar p_prev = 0, p = 1 / std::sqrt(Scalar(0.5)), sum = p * p;
    for (int k = 0; k + 1 < n; ++k) {
      const Scalar next = ((x[i] - alpha(k)) * p - (k > 0 ? beta(k - 1) * p_prev : Scalar(0))) / beta(k);
      p_prev = p;
      p = next;
      sum += p * p;
    }
    w[i] = 1 / sum;
  }
  QuadratureRule rule;
  rule.nodes.reserve(2 * x.size());
  rule.weights.reserve(2 * x.size());
  for (std::size_t i = x.size(); i-- > 0;) {
    rule.nodes.push_back(-x[i]);
    rule.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    rule.nodes.push_back(x[i]);
    rule.weights.push_back(w[i]);
  }
  Scalar total = 0;
  for (Scalar v : rule.weights) total += v;
  for (Scalar& v : rule.weights) v /= total;
  rule.exactness_degree = 2 * n - 1;
  rule.split_at_zero = true;
  return rule;
}

template <typename Scalar, typename F>
Scalar gauss_quadrature_expectation(const QuadratureRule<Scalar>& rule, F&& f) {
  Scalar acc = 0;
  for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
  return acc;
}

// E f(X, Y) for independent standard normals on the tensor-product rule.
template <typename Scalar, typename F>
Scalar gauss_quadrature_expectation_2d(const QuadratureRule<Scalar>& rule, F&& f) {
  Scalar acc = 0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    Scalar inner = 0;
    for (std::size_t j = 0; j < rule.size(); ++j) inner += rule.weights[j] * f(rule.nodes[i], rule.nodes[j]);
    acc += rule.weights[i] * inner;
  }
  return acc;
}

template <typename Scalar>
class BasicSubspace {
 public:
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  static constexpr double kOrthonormalityTolerance = 1e-10;

  BasicSubspace() = default;
  explicit BasicSubspace(Index ambient_dim) : basis_(ambient_dim, 0) {}

  explicit BasicSubspace(MatrixType basis, VectorType eigenvalues = VectorType())
      : basis_(std::move(basis)), eigenvalues_(std::move(eigenvalues)) {
    if (basis_.cols() > basis_.rows())
      throw DimensionError("Subspace: " + std::to_string(basis_.cols()) + " basis vectors in ambient dimension " +
                           std::to_string(basis_.rows()));
    if (eigenvalues_.size() != 0 && eigenvalues_.size() != basis_.cols())
      throw DimensionError("Subspace: eigenvalue count does not match basis size");
    if (!basis_.allFinite()) throw NumericError("Subspace: basis has non-finite entries");
    if (orthonormality_defect() > kOrthonormalityTolerance) orthonormalize();
  }

  static BasicSubspace full(Index ambient_dim) { return BasicSubspace(MatrixType::Identity(ambient_dim, ambient_dim)); }

  static BasicSubspace coordinate(Index ambient_dim, const std::vector<Index>& axes) {
    MatrixType b = MatrixType::Zero(ambient_dim, static_cast<Index>(axes.size()));
    for (std::size_t j = 0; j < axes.size(); ++j) {
      if (axes[j] < 0 || axes[j] >= ambient_dim) throw DimensionError("Subspace::coordinate: axis out of range");
      b(axes[j], static_cast<Index>(j)) = Scalar(1);
    }
    return BasicSubspace(std::move(b));
  }

  Index ambient_dim() const noexcept { return basis_.rows(); }
  Index dim() const noexcept { return basis_.cols(); }
  const MatrixType& basis() const noexcept { return basis_; }
  const VectorType& eigenvalues() const noexcept { return eigenvalues_; }
  bool reorthonormalized() const noexcept { return reorthonormalized_; }

  Scalar orthonormality_defect() const {
    if (dim() == 0) return Scalar(0);
    return (basis_.transpose() * basis_ - MatrixType::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  }

 private:
  void orthonormalize() {
    Eigen::HouseholderQR<MatrixType> qr(basis_);
    const MatrixType r = qr.matrixQR().topRows(dim()).template triangularView<Eigen::Upper>();
    MatrixType q = qr.householderQ() * MatrixType::Identity(ambient_dim(), dim());
    const Scalar scale = std::max<Scalar>(Scalar(1), basis_.cwiseAbs().maxCoeff());
    for (Index j = 0; j < dim(); ++j) {
      if (std::abs(r(j, j)) <= Scalar(1e-12) * scale) throw DimensionError("Subspace: basis is rank deficient");
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    }
    basis_ = std::move(q);
    reorthonormalized_ = true;
  }

  MatrixType basis_;
  VectorType eigenvalues_;
  bool reorthonormalized_ = false;
};

using Subspace = BasicSubspace<double>;

template <typename Scalar>
void check_ambient(const BasicSubspace<Scalar>& s, Index rows, const char* where) {
  if (rows != s.ambient_dim())
    throw DimensionError(std::string(where) + ": point dimension " + std::to_string(rows) +
                         " does not match ambient dimension " + std::to_string(s.ambient_dim()));
}

// Coordinates in the subspace basis; x may hold several points as columns.
template <typename Scalar, typename Derived>
auto project(const BasicSubspace<Scalar>& s, const Eigen::MatrixBase<Derived>& x) {
  check_ambient(s, x.rows(), "project");
  return s.basis().transpose() * x;
}

// Same, for points stored as rows.
template <typename Scalar, typename Derived>
auto project_rows(const BasicSubspace<Scalar>& s, const Eigen::MatrixBase<Derived>& x) {
  check_ambient(s, x.cols(), "project_rows");
  return x * s.basis();
}

template <typename Scalar, typename Derived>
auto embed(const BasicSubspace<Scalar>& s, const Eigen::MatrixBase<Derived>& coords) {
  if (coords.rows() != s.dim())
    throw DimensionError("embed: coordinate dimension " + std::to_string(coords.rows()) +
                         " does not match subspace dimension " + std::to_string(s.dim()));
  return s.basis() * coords;
}

template <typename Scalar, typename Derived>
typename BasicSubspace<Scalar>::MatrixType orthogonal_projection(const BasicSubspace<Scalar>& s,
                                                                 const Eigen::MatrixBase<Derived>& x) {
  check_ambient(s, x.rows(), "orthogonal_projection");
  return s.basis() * (s.basis().transpose() * x);
}

// Ascending principal angles, min(dim a, dim b) of them.
template <typename Scalar>
typename BasicSubspace<Scalar>::VectorType principal_angles(const BasicSubspace<Scalar>& a,
                                                            const BasicSubspace<Scalar>& b) {
  using VectorType = typename BasicSubspace<Scalar>::VectorType;
  using MatrixType = typename BasicSubspace<Scalar>::MatrixType;
  if (a.ambient_dim() != b.ambient_dim()) throw DimensionError("principal_angles: ambient dimensions differ");
  if (a.dim() == 0 || b.dim() == 0) return VectorType();
  const MatrixType c = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<MatrixType> svd(c);
  VectorType sv = svd.singularValues();
  VectorType angles(sv.size());
  for (Index i = 0; i < sv.size(); ++i) angles(i) = std::acos(std::clamp<Scalar>(sv(i), -1, 1));
  return angles;
}

template <typename DerivedA, typename DerivedB>
double vector_angle(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  const double c = u.dot(v) / (u.norm() * v.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// sign(0) = +1
inline double sign_of(double t) noexcept { return t >= 0 ? 1.0 : -1.0; }

inline double normal_pdf(double t) noexcept { return std::exp(-0.5 * t * t) / std::sqrt(2 * std::numbers::pi); }
inline double normal_cdf(double t) noexcept { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

}  // namespace mimq
