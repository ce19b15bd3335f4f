#pragma once

#include "mimq/gaussian.hpp"

#include <string>
#include <vector>

namespace mimq {

enum class L1Method { interior_point, subgradient };

struct L1SolverOptions {
  L1Method method = L1Method::interior_point;
  int max_iterations = 200;
  double tolerance = 1e-10;
  int subgradient_iterations = 20000;
};

struct L1Solution {
  Vector coefficients;
  double objective = 0;       // sum |y - phi c|
  double dual_objective = 0;  // lower bound certified by the dual iterate
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> log;
};

// min_c sum_i |y_i - phi_i . c|
L1Solution solve_l1(const Matrix& phi, const Vector& y, const L1SolverOptions& options = {});

}  // namespace mimq
