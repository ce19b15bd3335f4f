#include "mimq/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace mimq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Moments {
  double sum = 0, sq = 0;
  Index n = 0;
  void add(double v) {
    sum += v;
    sq += v * v;
    ++n;
  }
  double mean() const { return sum / double(n); }
  double se() const { return std::sqrt(std::max(sq / double(n) - mean() * mean(), 0.0) / double(n)); }
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// every subspace selection and every ledger in the suite is checked here
struct Audit {
  int selections = 0;
  int cap_violations = 0;
  int runs = 0;
  int budget_mismatches = 0;

  void selection(const Matrix& influence, double eta) {
    const SubspaceSelection sel = top_subspace(influence, eta);
    ++selections;
    if (sel.subspace.dim() > dimension_bound(influence.trace(), eta)) ++cap_violations;
  }

  void ledger(std::uint64_t used_q, std::uint64_t used_s, std::uint64_t pred_q, std::uint64_t pred_s) {
    ++runs;
    if (used_q != pred_q || used_s != pred_s) ++budget_mismatches;
  }

  ExperimentReport run(const ExperimentConfig& cfg) {
    ExperimentArtifacts art;
    ExperimentReport r = run_experiment(cfg, &art);
    report(cfg, r, art);
    return r;
  }

  void report(const ExperimentConfig& cfg, const ExperimentReport& r, const ExperimentArtifacts& art) {
    const BudgetPrediction p = predict_budget(cfg, r.dim_v);
    ledger(r.queries_used, r.samples_used, p.queries, p.samples);
    if (art.influence) selection(art.influence->matrix, r.eta);
  }
};

Audit audit;
int failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] AC-%02d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix planted_pair(Index d, std::uint64_t seed) {
  RandomStream rng(seed);
  const Subspace s(sample_standard_normal_rows(d, 2, rng));
  return s.basis().transpose();
}

void ac01() {
  const auto t0 = Clock::now();
  const auto rule = QuadratureRule<double>::gauss_hermite(200);
  const HermiteTable<double> h(12);
  double worst = 0;
  for (int i = 0; i <= 12; ++i)
    for (int j = 0; j <= 12; ++j) {
      const double v = gauss_quadrature_expectation(rule, [&](double x) { return h(i, x) * h(j, x); });
      worst = std::max(worst, std::abs(v - (i == j ? 1.0 : 0.0)));
    }
  const double t = seconds_since(t0);
  verdict(1, "Hermite orthonormality", worst <= 1e-10 && t < 1,
          fmt("max |E[HiHj] - delta_ij| = %.2e (tol 1e-10), %.3f s (limit 1 s)", worst, t));
}

// T_rho H_i = (1 - rho^2)^(i/2) H_i for T_rho g(x) = E g(sqrt(1 - rho^2) x + rho z)
void ac02() {
  const auto t0 = Clock::now();
  const auto rule = QuadratureRule<double>::gauss_hermite(200);
  const HermiteTable<double> h(8);
  double worst = 0;
  for (double rho : {0.1, 0.5}) {
    const double a = std::sqrt(1 - rho * rho);
    for (int i = 0; i <= 8; ++i) {
      const double v =
          gauss_quadrature_expectation_2d(rule, [&](double x, double z) { return h(i, x) * h(i, a * x + rho * z); });
      worst = std::max(worst, std::abs(v - std::pow(a, i)));
    }
  }
  const double t = seconds_since(t0);
  verdict(2, "noise operator eigenfunctions", worst <= 1e-8 && t < 5,
          fmt("max |E[Hi T_rho Hi] - (1-rho^2)^(i/2)| = %.2e (tol 1e-8), %.2f s (limit 5 s)", worst, t));
}

void ac03() {
  const auto t0 = Clock::now();
  const Index d = 10;
  const double rho = 0.25;
  RandomStream rng(303);
  const Vector w = sample_standard_normal(d, rng).normalized();
  const std::uint64_t n = gradient_sample_count(d, 1.0, rho, 0.05, 0.05);
  SmoothingParams p;
  p.rho = rho;
  p.inner_samples = static_cast<Index>(n);
  const Vector truth = std::sqrt(1 - rho * rho) * w;
  int good = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    LabelOracle o([w](const Eigen::Ref<const Vector>& x) { return w.dot(x); }, d, LabelMode::real);
    const Vector x = sample_standard_normal(d, rng);
    const double err = (smoothed_gradient(o, x, p, rng) - truth).norm();
    worst = std::max(worst, err);
    if (err <= 0.05) ++good;
    audit.ledger(o.ledger().queries_used(), 0, n, 0);
  }
  verdict(3, "gradient simulator", good >= 95,
          fmt("%d/100 trials within 0.05 (need 95), N = %llu, max error %.4f, %.0f s", good,
              static_cast<unsigned long long>(n), worst, seconds_since(t0)));
}

void ac04() {
  const auto t0 = Clock::now();
  const Index d = 4;
  RandomStream rng(404);
  const Vector w = sample_standard_normal(d, rng).normalized();
  Matrix three(3, d);
  for (Index i = 0; i < 3; ++i) three.row(i) = sample_standard_normal(d, rng).normalized().transpose();
  TargetSpec linear;
  linear.variant = TargetVariant::linear_comb_relus;
  linear.weights = Matrix(2, d);
  linear.weights.row(0) = w.transpose();
  linear.weights.row(1) = -w.transpose();
  linear.output_weights = Vector(2);
  linear.output_weights << 1, -1;
  const std::vector<std::pair<std::string, TargetSpec>> targets = {
      {"relu", make_relu(w)}, {"linear", linear}, {"sum of 3 relus", make_sum_relus(three)}};
  int checks = 0, held = 0;
  double worst_margin = -1e9;
  for (const auto& [name, t] : targets) {
    LabelOracle o(t, CorruptionSpec{});
    for (double rho : {0.05, 0.1, 0.2}) {
      SmoothingParams p;
      p.rho = rho;
      p.inner_samples = 100;
      Moments gap, grad;
      for (int i = 0; i < 4000; ++i) {
        const Vector x = sample_standard_normal(d, rng);
        const double diff = smoothed_value(o, x, p, rng) - o.label(x);
        gap.add(diff * diff);
        grad.add(target_gradient(t, x).squaredNorm());
      }
      const double slack = 4 * (gap.se() + 2 * rho * rho * grad.se());
      const double margin = gap.mean() - 2 * rho * rho * grad.mean();
      worst_margin = std::max(worst_margin, margin - slack);
      ++checks;
      if (margin <= slack) ++held;
    }
  }
  LabelOracle ltf(make_ltf(w), CorruptionSpec{});
  for (double rho : {0.05, 0.1, 0.2}) {
    SmoothingParams p;
    p.rho = rho;
    p.inner_samples = 100;
    Moments c;
    for (int i = 0; i < 4000; ++i) {
      const Vector x = sample_standard_normal(d, rng);
      c.add(ltf.label(x) * smoothed_value(ltf, x, p, rng));
    }
    const double bound = 1 - 2 * std::sqrt(std::numbers::pi) * (1 / std::sqrt(2 * std::numbers::pi)) * rho;
    ++checks;
    if (c.mean() >= bound - 4 * c.se()) ++held;
  }
  const double t = seconds_since(t0);
  verdict(4, "smoothing inequalities", held == checks && t < 60,
          fmt("%d/%d inequalities hold with 4 SE slack, %.1f s (limit 60 s)", held, checks, t));
}

void ac05() {
  const auto t0 = Clock::now();
  const Index d = 15;
  SmoothingParams p;
  p.rho = 0.1;
  p.inner_samples = 200;
  const Index outer = 2000;
  int clean_ok = 0, noisy_ok = 0;
  double clean_worst = 0, noisy_worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (bool noisy : {false, true}) {
      CorruptionSpec c;
      if (noisy) {
        c.kind = CorruptionKind::additive_bounded;
        c.bound = 0.1;
        c.seed = 500 + seed;
      }
      LabelOracle o(make_relu(Vector::Unit(d, 0)), c);
      RandomStream rng(5000 + seed);
      const InfluenceEstimate est = estimate_influence(o, p, outer, rng);
      audit.ledger(o.ledger().queries_used(), o.ledger().samples_used(),
                   static_cast<std::uint64_t>(2 * outer * p.inner_samples), static_cast<std::uint64_t>(outer));
      audit.selection(est.matrix, 0.05);
      audit.selection(est.matrix, select_threshold(ThresholdMode::real, 0.15, 1, 1));
      const SubspaceSelection sel = top_subspace(est, 1e-9);
      const double angle = vector_angle(sel.eigenvectors.col(0), Vector::Unit(d, 0));
      if (noisy) {
        noisy_worst = std::max(noisy_worst, angle);
        if (angle <= 0.3) ++noisy_ok;
      } else {
        clean_worst = std::max(clean_worst, angle);
        if (angle <= 0.15) ++clean_ok;
      }
    }
  }
  verdict(5, "influence recovery", clean_ok >= 9 && noisy_ok >= 9,
          fmt("clean %d/10 within 0.15 rad (worst %.3f), additive A=0.1 %d/10 within 0.3 rad (worst %.3f), %.0f s",
              clean_ok, clean_worst, noisy_ok, noisy_worst, seconds_since(t0)));
}

void ac07() {
  const auto t0 = Clock::now();
  const auto rule = QuadratureRule<double>::half_range(100);
  const HermiteTable<double> h(20);
  const double energy = gauss_quadrature_expectation(rule, [](double x) { return x > 0 ? x * x : 0.0; });
  const double grad_energy = gauss_quadrature_expectation(rule, [](double x) { return x > 0 ? 1.0 : 0.0; });
  double captured = 0;
  bool ok = true;
  double worst = -1;
  for (int m = 0; m <= 20; ++m) {
    const double c = gauss_quadrature_expectation(rule, [&](double x) { return x > 0 ? x * h(m, x) : 0.0; });
    captured += c * c;
    if (m == 0) continue;
    const double tail = energy - captured;
    const double bound = grad_energy / m;
    worst = std::max(worst, tail / bound);
    if (tail > bound + 1e-12) ok = false;
  }
  const double t = seconds_since(t0);
  verdict(7, "Hermite tail bound", ok && t < 1,
          fmt("max tail / bound over m <= 20 = %.3f (need <= 1), %.3f s (limit 1 s)", worst, t));
}

ExperimentConfig real_sum_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.target = make_sum_relus(planted_pair(12, 800 + seed));
  cfg.corruption.kind = CorruptionKind::additive_bounded;
  cfg.corruption.bound = 0.1;
  cfg.corruption.seed = 900 + seed;
  LearnerConfig& l = cfg.learner;
  l.mode = LearnerMode::real_mim;
  l.eps = 0.15;
  l.degree = 6;
  l.rho = 0.2;
  l.eta = 0.1;
  l.outer_samples = 2000;
  l.inner_samples = 100;
  return cfg;
}

void ac08() {
  const auto t0 = Clock::now();
  std::vector<double> excess, angle;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ExperimentReport r = audit.run(real_sum_config(seed));
    excess.push_back(r.excess);
    angle.push_back(r.principal_angles.size() ? r.principal_angles.maxCoeff() : std::numbers::pi / 2);
  }
  const double t = seconds_since(t0);
  const double med = median(excess);
  verdict(8, "real multi-index pipeline", med <= 0.15 && t <= 600,
          fmt("median excess L2^2 %.4f (need <= 0.15), worst %.4f, median max principal angle %.3f, %.0f s (limit 600)",
              med, *std::max_element(excess.begin(), excess.end()), median(angle), t));
}

ExperimentConfig boolean_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.target = make_intersection(planted_pair(12, 1800 + seed));
  cfg.corruption.kind = CorruptionKind::hash_flip;
  cfg.corruption.rate = 0.05;
  cfg.corruption.seed = 1900 + seed;
  LearnerConfig& l = cfg.learner;
  l.mode = LearnerMode::boolean_mim;
  l.eps = 0.1;
  l.rho = 0.2;
  l.eta = 0.05;
  l.degree = 8;
  l.outer_samples = 2000;
  l.inner_samples = 100;
  return cfg;
}

void ac09() {
  const auto t0 = Clock::now();
  std::vector<double> excess;
  for (std::uint64_t seed = 0; seed < 10; ++seed) excess.push_back(audit.run(boolean_config(seed)).excess);
  const double t = seconds_since(t0);
  const double med = median(excess);
  verdict(9, "Boolean multi-index pipeline", med <= 0.10 && t <= 600,
          fmt("median excess 0-1 %.4f (need <= 0.10), worst %.4f, %.0f s (limit 600)", med,
              *std::max_element(excess.begin(), excess.end()), t));
}

ExperimentConfig proper_config_for(LearnerMode mode, Index d, double eps, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  RandomStream rng(3000 + seed);
  const Vector w = sample_standard_normal(d, rng).normalized();
  cfg.target = mode == LearnerMode::proper_ltf ? make_ltf(w) : make_relu(w);
  cfg.test_samples = 20000;
  LearnerConfig& l = cfg.learner;
  l.mode = mode;
  l.eps = eps;
  l.rho = 0.25;
  l.eta = 0.1;
  l.outer_samples = 400;
  l.inner_samples = 200;
  l.norm_bound = 1;
  return cfg;
}

void ac10() {
  const auto t0 = Clock::now();
  int good = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ExperimentConfig cfg = proper_config_for(LearnerMode::proper_ltf, 15, 0.2, seed);
    const ExperimentReport r = audit.run(cfg);
    const Candidate c = r.hypothesis.get<Candidate>();
    const double dis = vector_angle(c.direction, cfg.target.weights.row(0).transpose()) / std::numbers::pi;
    worst = std::max(worst, dis);
    if (dis <= 0.2) ++good;
  }
  const double t = seconds_since(t0);
  verdict(10, "proper LTF learner", good >= 9 && t <= 300,
          fmt("%d/10 seeds with angle/pi <= 0.2 (need 9), worst %.3f, %.0f s (limit 300)", good, worst, t));
}

void ac11() {
  const auto t0 = Clock::now();
  int good = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ExperimentReport r = audit.run(proper_config_for(LearnerMode::proper_relu, 12, 0.15, seed));
    worst = std::max(worst, r.test_error);
    if (r.test_error <= 0.15) ++good;
  }
  const double t = seconds_since(t0);
  verdict(11, "proper ReLU learner", good >= 9 && t <= 300,
          fmt("%d/10 seeds with test L2^2 <= 0.15 (need 9), worst %.4f, %.0f s (limit 300)", good, worst, t));
}

ExperimentConfig baseline_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  RandomStream rng(4000 + seed);
  cfg.target = make_relu(sample_standard_normal(12, rng).normalized());
  cfg.test_samples = 20000;
  LearnerConfig& l = cfg.learner;
  l.mode = LearnerMode::real_mim;
  l.eps = 0.2;
  l.rho = 0.3;
  l.eta = 0.15;
  l.degree = 4;
  l.outer_samples = 200;
  l.inner_samples = 2;
  l.regression_samples = 800;
  return cfg;
}

void ac12() {
  const auto t0 = Clock::now();
  int wins = 0;
  std::vector<double> pipe, base;
  std::uint64_t budget = 0;
  const std::uint64_t features = multi_index_count(12, 4);
  bool under = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ExperimentConfig cfg = baseline_config(seed);
    const BaselineComparison cmp = compare_baseline(cfg);
    audit.report(cfg, cmp.pipeline, ExperimentArtifacts{});
    audit.ledger(0, cmp.baseline.samples_used, 0, cmp.pipeline.queries_used + cmp.pipeline.samples_used);
    budget = cmp.baseline.samples_used;
    if (budget >= features) under = false;
    pipe.push_back(cmp.pipeline.test_error);
    base.push_back(cmp.baseline.test_error);
    if (cmp.pipeline.test_error < cmp.baseline.test_error) ++wins;
  }
  const double t = seconds_since(t0);
  verdict(12, "baseline separation", wins >= 7 && under && t <= 900,
          fmt("pipeline better on %d/10 seeds (need 7); median test L2^2 %.4f vs %.4f; %llu accesses < %llu features; "
              "%.0f s (limit 900)",
              wins, median(pipe), median(base), static_cast<unsigned long long>(budget),
              static_cast<unsigned long long>(features), t));
}

void ac06() {
  verdict(6, "dimension cap", audit.cap_violations == 0 && audit.selections > 0,
          fmt("%d violations over %d subspace selections", audit.cap_violations, audit.selections));
}

void ac13() {
  const auto t0 = Clock::now();
  int identical = 0, total = 0;
  std::vector<ExperimentConfig> configs = {real_sum_config(42), boolean_config(42),
                                           proper_config_for(LearnerMode::proper_ltf, 15, 0.2, 42),
                                           proper_config_for(LearnerMode::proper_relu, 12, 0.15, 42)};
  for (ExperimentConfig& cfg : configs) {
    cfg.deterministic = true;
    cfg.test_samples = 20000;
    if (cfg.learner.mode == LearnerMode::real_mim || cfg.learner.mode == LearnerMode::boolean_mim)
      cfg.learner.outer_samples = 500;
    const std::string a = report_to_json(audit.run(cfg), false).dump(2);
    const std::string b = report_to_json(audit.run(cfg), false).dump(2);
    ++total;
    if (a == b) ++identical;
  }
  verdict(13, "determinism and budgets", identical == total && audit.budget_mismatches == 0 && audit.runs > 0,
          fmt("%d/%d configs byte-identical; %d ledger mismatches over %d runs; %.0f s", identical, total,
              audit.budget_mismatches, audit.runs, seconds_since(t0)));
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  const std::vector<std::pair<int, std::function<void()>>> steps = {
      {1, ac01}, {2, ac02}, {3, ac03},  {4, ac04},  {5, ac05},  {7, ac07}, {8, ac08},
      {9, ac09}, {10, ac10}, {11, ac11}, {12, ac12}, {13, ac13}, {6, ac06}};
  for (const auto& [id, step] : steps) {
    if (!want(id)) continue;
    try {
      step();
    } catch (const std::exception& e) {
      verdict(id, "error", false, e.what());
    }
  }
  return failures ? 1 : 0;
}
