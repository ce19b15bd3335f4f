#include "mimq/influence.hpp"

#include <doctest.h>

#include <cmath>

using namespace mimq;

namespace {

SmoothingParams params(double rho, Index n) {
  SmoothingParams p;
  p.rho = rho;
  p.inner_samples = n;
  return p;
}

LabelOracle linear_oracle(const Vector& w) {
  return LabelOracle([w](const Eigen::Ref<const Vector>& x) { return w.dot(x); }, w.size(), LabelMode::real);
}

double op_norm(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()(0); }

}  // namespace

TEST_CASE("influence of a linear function") {
  RandomStream rng(1);
  Vector w = sample_standard_normal(10, rng).normalized();
  LabelOracle o = linear_oracle(w);
  const double rho = 0.3;
  const InfluenceEstimate est = estimate_influence(o, params(rho, 200), 2000, rng);
  CHECK(op_norm(est.matrix - (1 - rho * rho) * w * w.transpose()) <= 0.1);
  CHECK((est.matrix - est.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(o.ledger().samples_used() == 2000);
  CHECK(o.ledger().queries_used() == 2 * 2000 * 200);
  CHECK(est.outer_samples == 2000);
  CHECK(est.estimator == InfluenceEstimator::paired);

  LabelOracle o2 = linear_oracle(w);
  estimate_influence(o2, params(rho, 30), 100, rng, InfluenceEstimator::single);
  CHECK(o2.ledger().queries_used() == 100 * 30);
}

TEST_CASE("influence of a constant") {
  LabelOracle o([](const Eigen::Ref<const Vector>&) { return 0.7; }, 6, LabelMode::real);
  RandomStream rng(2);
  const SmoothingParams p = params(0.2, static_cast<Index>(gradient_sample_count(6, 0.7, 0.2, 0.5, 0.1)));
  const InfluenceEstimate est = estimate_influence(o, p, 50, rng);
  CHECK(op_norm(est.matrix) <= 0.05);
}

TEST_CASE("influence of a ReLU is aligned with its weight") {
  const Index d = 15;
  LabelOracle o(make_relu(Vector::Unit(d, 0)), CorruptionSpec{});
  RandomStream rng(3);
  const InfluenceEstimate est = estimate_influence(o, params(0.1, 200), 2000, rng);
  const SubspaceSelection sel = top_subspace(est, 1e-9);
  CHECK(vector_angle(sel.eigenvectors.col(0), Vector::Unit(d, 0)) <= 0.15);

  // trace versus E ||grad T_rho ReLU||^2 = (1 - rho^2) E[Phi(a t / rho)^2]
  const double rho = 0.1, a = std::sqrt(1 - rho * rho);
  const auto rule = QuadratureRule<double>::gauss_hermite(200);
  const double exact = a * a * gauss_quadrature_expectation(rule, [&](double t) {
    const double c = normal_cdf(a * t / rho);
    return c * c;
  });
  CHECK(std::abs(est.matrix.trace() - exact) <= 0.05);
  const double eta = 0.01;
  const double psi = 1.0 / rho;
  CHECK(dimension_bound(est.matrix.trace(), eta) <= psi * psi / eta);
}

TEST_CASE("paired estimator removes the diagonal bias") {
  const Index d = 5;
  RandomStream rng(4);
  const Vector w = sample_standard_normal(d, rng).normalized();
  const double rho = 0.3;
  const Matrix truth = (1 - rho * rho) * w * w.transpose();
  Matrix sum_p = Matrix::Zero(d, d), sq_p = Matrix::Zero(d, d);
  Matrix sum_s = Matrix::Zero(d, d), sq_s = Matrix::Zero(d, d);
  const int runs = 50;
  for (int r = 0; r < runs; ++r) {
    LabelOracle o = linear_oracle(w);
    const Matrix p = estimate_influence(o, params(rho, 10), 200, rng).matrix;
    const Matrix s = estimate_influence(o, params(rho, 10), 200, rng, InfluenceEstimator::single).matrix;
    sum_p += p;
    sq_p += p.cwiseProduct(p);
    sum_s += s;
    sq_s += s.cwiseProduct(s);
  }
  const Matrix mean_p = sum_p / runs, mean_s = sum_s / runs;
  const Matrix se_p = ((sq_p / runs - mean_p.cwiseProduct(mean_p)) / runs).cwiseMax(0.0).cwiseSqrt();
  const Matrix se_s = ((sq_s / runs - mean_s.cwiseProduct(mean_s)) / runs).cwiseMax(0.0).cwiseSqrt();
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) CHECK(std::abs(mean_p(i, j) - truth(i, j)) <= 4 * se_p(i, j));
  // estimator covariance a^2 (I + w w^T) / (N / 2) shows up on the single-estimate diagonal
  for (Index i = 0; i < d; ++i) {
    CHECK(mean_s(i, i) - truth(i, i) > 4 * se_s(i, i));
    const double bias = (1 - rho * rho) * (1 + w(i) * w(i)) / 5;
    CHECK(std::abs(mean_s(i, i) - truth(i, i) - bias) <= 4 * se_s(i, i));
  }
}

TEST_CASE("top subspace examples") {
  Matrix m = Vector(Eigen::Vector3d(3, 1, 0.001)).asDiagonal();
  SubspaceSelection sel = top_subspace(m, 0.5);
  CHECK(sel.subspace.dim() == 2);
  CHECK(principal_angles(sel.subspace, Subspace::coordinate(3, {0, 1})).maxCoeff() <= 1e-12);
  CHECK(sel.eigenvalues(0) == doctest::Approx(3));
  CHECK(sel.eigenvalues(2) == doctest::Approx(0.001));
  CHECK(sel.subspace.eigenvalues().size() == 2);
  CHECK(sel.warnings.empty());

  sel = top_subspace(Matrix::Zero(4, 4), 0.1);
  CHECK(sel.subspace.dim() == 0);
  CHECK(sel.subspace.ambient_dim() == 4);

  Vector w(3);
  w << 1, -1, 0;
  sel = top_subspace(w * w.transpose(), 1.0);
  REQUIRE(sel.subspace.dim() == 1);
  CHECK(vector_angle(sel.subspace.basis().col(0), w) <= 1e-10);
  CHECK(sel.subspace.basis()(0, 0) > 0);

  // inclusive threshold
  CHECK(top_subspace(Matrix(Vector(Eigen::Vector2d(0.5, 0.25)).asDiagonal()), 0.5).subspace.dim() == 1);

  CHECK_THROWS_AS(top_subspace(Matrix::Zero(2, 3), 0.1), DimensionError);
  CHECK_THROWS_AS(top_subspace(Matrix::Zero(2, 2), 0.0), ParameterError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(top_subspace(bad, 0.1), NumericError);
}

TEST_CASE("negative eigenvalues and the trace cap produce warnings") {
  const Matrix m = Vector(Eigen::Vector3d(1, 1, -1.5)).asDiagonal();
  const SubspaceSelection sel = top_subspace(m, 0.5);
  CHECK(sel.bound == 1);
  CHECK(sel.subspace.dim() == 1);
  CHECK(sel.warnings.size() == 2);
}

TEST_CASE("canonical signs and reproducible order") {
  RandomStream rng(5);
  const Matrix a = sample_standard_normal_rows(6, 6, rng);
  const Matrix m = a * a.transpose();
  const SubspaceSelection s1 = top_subspace(m, 0.1), s2 = top_subspace(Matrix(m), 0.1);
  CHECK(s1.eigenvectors == s2.eigenvectors);
  for (Index j = 0; j < 6; ++j) {
    Index first = 0;
    while (std::abs(s1.eigenvectors(first, j)) <= 1e-12) ++first;
    CHECK(s1.eigenvectors(first, j) > 0);
    if (j > 0) CHECK(s1.eigenvalues(j) <= s1.eigenvalues(j - 1));
  }
  CHECK((s1.eigenvectors.transpose() * s1.eigenvectors - Matrix::Identity(6, 6)).norm() <= 1e-10);

  const SubspaceSelection id = top_subspace(Matrix::Identity(3, 3), 0.5);
  CHECK(id.subspace.dim() == 3);
  CHECK(id.eigenvectors.isApprox(Matrix(id.eigenvectors.cwiseAbs())));
}

TEST_CASE("threshold monotonicity and the dimension cap") {
  RandomStream rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = sample_standard_normal_rows(8, 8, rng);
    const Matrix psd = a * a.transpose() / 8;
    Index prev = 9;
    for (double eta = 0.01; eta < 10; eta *= 1.5) {
      const SubspaceSelection sel = top_subspace(psd, eta);
      CHECK(sel.subspace.dim() <= prev);
      CHECK(sel.subspace.dim() <= dimension_bound(psd.trace(), eta));
      prev = sel.subspace.dim();
    }
    const Matrix indefinite = 0.5 * (a + a.transpose());
    for (double eta : {0.05, 0.3, 1.0}) {
      const SubspaceSelection sel = top_subspace(indefinite, eta);
      CHECK(sel.subspace.dim() <= dimension_bound(indefinite.trace(), eta));
      for (Index j = 0; j < sel.subspace.dim(); ++j) CHECK(sel.eigenvalues(j) >= eta);
    }
  }
}

TEST_CASE("dimension bound and thresholds") {
  CHECK(dimension_bound(10, 2) == 5);
  CHECK(dimension_bound(0.9, 1) == 0);
  CHECK(dimension_bound(0, 1) == 0);
  CHECK_THROWS_AS(dimension_bound(1, 0), ParameterError);

  CHECK(select_threshold(ThresholdMode::boolean, 0.4, 2) == doctest::Approx(0.0025));
  CHECK(select_threshold(ThresholdMode::real, 0.4, 1, 2.0) == doctest::Approx(0.0025));
  CHECK(select_threshold(ThresholdMode::real, 0.2, 3, 1.5) ==
        doctest::Approx(select_threshold(ThresholdMode::real, 0.4, 3, 1.5) / 4));
  CHECK_THROWS_AS(select_threshold(ThresholdMode::boolean, 0.4, 0), ParameterError);
}

TEST_CASE("marginalization error for a square") {
  RandomStream rng(7);
  const int n = 200000;
  double e = 0, e2 = 0, g = 0, g2 = 0;
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_standard_normal(2, rng);
    const double r = (x(0) * x(0) - 1) * (x(0) * x(0) - 1);  // x1^2 minus its average over x1
    const double d = 4 * x(0) * x(0);
    e += r;
    e2 += r * r;
    g += d;
    g2 += d * d;
  }
  const double me = e / n, mg = g / n;
  const double se_e = std::sqrt((e2 / n - me * me) / n), se_g = std::sqrt((g2 / n - mg * mg) / n);
  CHECK(std::abs(me - 2) <= 4 * se_e);
  CHECK(std::abs(mg - 4) <= 4 * se_g);
  CHECK(me <= mg);
}

TEST_CASE("influence estimate JSON round trip") {
  RandomStream rng(8);
  LabelOracle o = linear_oracle(Vector::Unit(3, 1));
  const InfluenceEstimate est = estimate_influence(o, params(0.4, 20), 30, rng);
  const nlohmann::json j = est;
  const InfluenceEstimate back = j.get<InfluenceEstimate>();
  CHECK(back.matrix == est.matrix);
  CHECK(back.outer_samples == 30);
  CHECK(back.params.rho == 0.4);
  CHECK(back.params.inner_samples == 20);
  CHECK(back.seed == est.seed);
  nlohmann::json bad = j;
  bad["estimator"] = "triple";
  CHECK_THROWS_AS(bad.get<InfluenceEstimate>(), ConfigError);
}
