#pragma once

#include "mimq/oracle.hpp"

#include <cstdint>

namespace mimq {

struct SmoothingParams {
  double rho = 0.1;
  Index inner_samples = 1000;
  double delta = 0.05;
  double label_bound = 1.0;

  void validate() const;
};

// Noise-operator estimates T_rho y(x) = E_z y(sqrt(1 - rho^2) x + rho z) from label queries.
// Both use antithetic pairs (z, -z); an odd sample count leaves the last draw unpaired.
double smoothed_value(LabelOracle& oracle, const Eigen::Ref<const Vector>& x, const SmoothingParams& params,
                      RandomStream& rng);
Vector smoothed_gradient(LabelOracle& oracle, const Eigen::Ref<const Vector>& x, const SmoothingParams& params,
                         RandomStream& rng);

// ceil(8 d M^2 ln(2d / delta) / (rho^2 eps^2)), delta in (0, 1]
std::uint64_t gradient_sample_count(Index d, double label_bound, double rho, double eps, double delta);

inline double truncate_label(double y, double bound) {
  return std::copysign(std::min(std::abs(y), bound), y);
}

}  // namespace mimq
