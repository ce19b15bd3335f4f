#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace mimq {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  RandomStream derived(std::uint64_t stream) const { return RandomStream(derive_seed(seed_, stream)); }

  double normal() { return normal_(engine_); }

  double uniform() { return std::generate_canonical<double, 53>(engine_); }

  std::uint64_t bits() { return engine_(); }

  template <typename Derived>
  void fill_normal(Eigen::MatrixBase<Derived>& out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out.coeffRef(i) = normal_(engine_);
  }

  template <typename Derived>
  void fill_normal(Eigen::MatrixBase<Derived>&& out) {
    fill_normal(out);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

inline Eigen::VectorXd sample_standard_normal(Eigen::Index dim, RandomStream& rng) {
  Eigen::VectorXd x(dim);
  rng.fill_normal(x);
  return x;
}

inline Eigen::MatrixXd sample_standard_normal_rows(Eigen::Index n, Eigen::Index dim, RandomStream& rng) {
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) x(i, j) = rng.normal();
  return x;
}

}  // namespace mimq
