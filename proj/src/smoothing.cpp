#include "mimq/smoothing.hpp"

#include <cmath>

namespace mimq {

void SmoothingParams::validate() const {
  if (!(rho > 0 && rho < 1)) throw ParameterError("smoothing: rho must lie in (0, 1)");
  if (inner_samples <= 0) throw ParameterError("smoothing: inner sample count must be positive");
  if (!(delta > 0 && delta < 1)) throw ParameterError("smoothing: delta must lie in (0, 1)");
  if (!(label_bound > 0)) throw ParameterError("smoothing: label bound must be positive");
}

double smoothed_value(LabelOracle& oracle, const Eigen::Ref<const Vector>& x, const SmoothingParams& params,
                      RandomStream& rng) {
  params.validate();
  if (x.size() != oracle.ambient_dim()) throw DimensionError("smoothed_value: point dimension mismatch");
  const double a = std::sqrt(1 - params.rho * params.rho);
  const Vector center = a * x;
  Vector z(x.size()), q(x.size());
  double acc = 0;
  const Index pairs = params.inner_samples / 2;
  for (Index j = 0; j < pairs; ++j) {
    rng.fill_normal(z);
    q.noalias() = center + params.rho * z;
    acc += oracle.query(q);
    q.noalias() = center - params.rho * z;
    acc += oracle.query(q);
  }
  if (params.inner_samples % 2) {
    rng.fill_normal(z);
    q.noalias() = center + params.rho * z;
    acc += oracle.query(q);
  }
  return acc / static_cast<double>(params.inner_samples);
}

Vector smoothed_gradient(LabelOracle& oracle, const Eigen::Ref<const Vector>& x, const SmoothingParams& params,
                         RandomStream& rng) {
  params.validate();
  if (x.size() != oracle.ambient_dim()) throw DimensionError("smoothed_gradient: point dimension mismatch");
  const double a = std::sqrt(1 - params.rho * params.rho);
  const Vector center = a * x;
  Vector z(x.size()), q(x.size());
  Vector acc = Vector::Zero(x.size());
  const Index pairs = params.inner_samples / 2;
  for (Index j = 0; j < pairs; ++j) {
    rng.fill_normal(z);
    q.noalias() = center + params.rho * z;
    const double up = oracle.query(q);
    q.noalias() = center - params.rho * z;
    const double down = oracle.query(q);
    acc.noalias() += (up - down) * z;
  }
  if (params.inner_samples % 2) {
    rng.fill_normal(z);
    q.noalias() = center + params.rho * z;
    acc.noalias() += oracle.query(q) * z;
  }
  return acc * (a / (static_cast<double>(params.inner_samples) * params.rho));
}

std::uint64_t gradient_sample_count(Index d, double label_bound, double rho, double eps, double delta) {
  if (d <= 0) throw ParameterError("gradient_sample_count: dimension must be positive");
  if (!(rho > 0 && rho < 1) || !(eps > 0) || !(delta > 0 && delta <= 1) || !(label_bound > 0))
    throw ParameterError("gradient_sample_count: parameters out of range");
  const double dd = static_cast<double>(d);
  const double n = 8 * dd * label_bound * label_bound * std::log(2 * dd / delta) / (rho * rho * eps * eps);
  if (!(n < 1.8e19)) throw SizeError("gradient_sample_count: count overflows");
  return static_cast<std::uint64_t>(std::ceil(n));
}

}  // namespace mimq
