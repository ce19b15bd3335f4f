#include "mimq/pipeline.hpp"

#include "mimq/json_util.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mimq {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_keys(const nlohmann::json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(path.empty() ? key : path + "/" + key, "unknown key");
}

template <typename T>
void positive(const std::string& path, T v) {
  if (!(v > 0)) throw ConfigError(path, "must be positive");
}

ClassParameters effective_class(const LearnerConfig& cfg, ClassParameters cls) {
  if (cfg.M) cls.M = *cfg.M;
  if (cfg.L) cls.L = *cfg.L;
  if (cfg.gamma) cls.gamma = *cfg.gamma;
  if (cfg.k) cls.k = *cfg.k;
  return cls;
}

LossMode loss_for(LearnerMode m) {
  return m == LearnerMode::real_mim || m == LearnerMode::proper_relu ? LossMode::l22 : LossMode::zero_one;
}

LabelMode label_mode_for(LearnerMode m) {
  return m == LearnerMode::real_mim || m == LearnerMode::proper_relu ? LabelMode::real : LabelMode::boolean;
}

nlohmann::json points_to_json(const Matrix& x, const Vector& y) {
  return {{"points", matrix_to_json(x)}, {"labels", vector_to_json(y)}};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

std::string to_string(LearnerMode m) {
  switch (m) {
    case LearnerMode::real_mim: return "real_mim";
    case LearnerMode::boolean_mim: return "boolean_mim";
    case LearnerMode::proper_ltf: return "proper_ltf";
    case LearnerMode::proper_relu: return "proper_relu";
  }
  return "unknown";
}

LearnerMode parse_learner_mode(const std::string& s) {
  for (auto m : {LearnerMode::real_mim, LearnerMode::boolean_mim, LearnerMode::proper_ltf, LearnerMode::proper_relu})
    if (to_string(m) == s) return m;
  throw ConfigError("mode", "unknown mode '" + s + "' (expected real_mim, boolean_mim, proper_ltf, proper_relu)");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  JsonReader top(j, "");
  check_keys(j, "", {"mode", "seed", "target", "corruption", "learner", "budget", "evaluation", "deterministic",
                     "baseline", "sweep", "description"});
  ExperimentConfig cfg;
  LearnerConfig& l = cfg.learner;
  l.mode = parse_learner_mode(top.required<std::string>("mode"));
  cfg.seed = top.optional<std::uint64_t>("seed", 0);
  cfg.deterministic = top.optional<bool>("deterministic", false);
  cfg.target = top.required<TargetSpec>("target");
  if (top.has("corruption")) cfg.corruption = top.required<CorruptionSpec>("corruption");
  try {
    cfg.corruption.validate(cfg.target.ambient_dim(), cfg.target.mode());
  } catch (const std::exception& e) {
    throw ConfigError("corruption", e.what());
  }
  if (cfg.target.mode() != label_mode_for(l.mode))
    throw ConfigError("mode", "mode " + to_string(l.mode) + " does not match " + to_string(cfg.target.mode()) +
                                  " target '" + to_string(cfg.target.variant) + "'");
  if ((l.mode == LearnerMode::proper_ltf && cfg.target.variant != TargetVariant::ltf) ||
      (l.mode == LearnerMode::proper_relu && cfg.target.variant != TargetVariant::relu))
    throw ConfigError("mode", "proper learners need a target of their own class");

  const JsonReader lr = top.object("learner");
  check_keys(top.child("learner"), "learner",
             {"eps", "delta", "class", "rho", "rho_constant", "eta", "degree", "degree_cap", "max_features",
              "outer_samples", "inner_samples", "regression_samples", "estimator", "l1_solver", "resolution",
              "norm_bound", "erm_samples", "erm_constant", "max_candidates", "allow_shortcut"});
  l.eps = lr.required<double>("eps");
  if (!(l.eps > 0 && l.eps < 1)) throw ConfigError("learner/eps", "must lie in (0, 1)");
  l.delta = lr.optional<double>("delta", l.delta);
  if (!(l.delta > 0 && l.delta < 1)) throw ConfigError("learner/delta", "must lie in (0, 1)");
  if (lr.has("class")) {
    const JsonReader cr = lr.object("class");
    check_keys(lr.child("class"), "learner/class", {"M", "L", "gamma", "k"});
    if (cr.has("M")) positive("learner/class/M", *(l.M = cr.required<double>("M")));
    if (cr.has("L")) positive("learner/class/L", *(l.L = cr.required<double>("L")));
    if (cr.has("gamma")) positive("learner/class/gamma", *(l.gamma = cr.required<double>("gamma")));
    if (cr.has("k")) positive("learner/class/k", *(l.k = cr.required<Index>("k")));
  }
  if (lr.has("rho")) {
    l.rho = lr.required<double>("rho");
    if (!(*l.rho > 0 && *l.rho < 1)) throw ConfigError("learner/rho", "must lie in (0, 1)");
  }
  if (lr.has("rho_constant")) positive("learner/rho_constant", *(l.rho_constant = lr.required<double>("rho_constant")));
  if (lr.has("eta")) positive("learner/eta", *(l.eta = lr.required<double>("eta")));
  if (lr.has("degree")) {
    l.degree = lr.required<int>("degree");
    if (*l.degree < 0) throw ConfigError("learner/degree", "must be non-negative");
  }
  l.degree_cap = lr.optional<int>("degree_cap", l.degree_cap);
  if (l.degree_cap < 0) throw ConfigError("learner/degree_cap", "must be non-negative");
  l.max_features = lr.optional<std::uint64_t>("max_features", l.max_features);
  positive("learner/max_features", l.max_features);
  l.outer_samples = lr.optional<Index>("outer_samples", l.outer_samples);
  positive("learner/outer_samples", l.outer_samples);
  if (lr.has("inner_samples")) {
    const auto& v = lr.child("inner_samples");
    if (v.is_string()) {
      if (v.get<std::string>() != "planner") throw ConfigError("learner/inner_samples", "expected integer or 'planner'");
      l.inner_from_planner = true;
    } else {
      l.inner_samples = lr.required<Index>("inner_samples");
      positive("learner/inner_samples", *l.inner_samples);
    }
  }
  if (lr.has("regression_samples"))
    positive("learner/regression_samples", *(l.regression_samples = lr.required<Index>("regression_samples")));
  const std::string est = lr.optional<std::string>("estimator", "paired");
  if (est == "paired")
    l.estimator = InfluenceEstimator::paired;
  else if (est == "single")
    l.estimator = InfluenceEstimator::single;
  else
    throw ConfigError("learner/estimator", "expected 'paired' or 'single'");
  const std::string solver = lr.optional<std::string>("l1_solver", "interior_point");
  if (solver == "interior_point")
    l.l1_method = L1Method::interior_point;
  else if (solver == "subgradient")
    l.l1_method = L1Method::subgradient;
  else
    throw ConfigError("learner/l1_solver", "expected 'interior_point' or 'subgradient'");
  if (lr.has("resolution")) positive("learner/resolution", *(l.resolution = lr.required<double>("resolution")));
  l.norm_bound = lr.optional<double>("norm_bound", l.norm_bound);
  positive("learner/norm_bound", l.norm_bound);
  if (lr.has("erm_samples")) positive("learner/erm_samples", *(l.erm_samples = lr.required<Index>("erm_samples")));
  l.erm_constant = lr.optional<double>("erm_constant", l.erm_constant);
  positive("learner/erm_constant", l.erm_constant);
  l.max_candidates = lr.optional<std::uint64_t>("max_candidates", l.max_candidates);
  l.allow_shortcut = lr.optional<bool>("allow_shortcut", l.allow_shortcut);

  if (top.has("budget")) {
    const JsonReader br = top.object("budget");
    check_keys(top.child("budget"), "budget", {"queries", "samples"});
    cfg.query_budget = br.optional<std::uint64_t>("queries", cfg.query_budget);
    cfg.sample_budget = br.optional<std::uint64_t>("samples", cfg.sample_budget);
  }
  if (top.has("evaluation")) {
    const JsonReader er = top.object("evaluation");
    check_keys(top.child("evaluation"), "evaluation", {"test_samples"});
    cfg.test_samples = er.optional<Index>("test_samples", cfg.test_samples);
    positive("evaluation/test_samples", cfg.test_samples);
  }
  if (top.has("baseline")) {
    const JsonReader br = top.object("baseline");
    check_keys(top.child("baseline"), "baseline", {"degree"});
    cfg.baseline_degree = br.optional<Index>("degree", cfg.baseline_degree);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  const LearnerConfig& l = cfg.learner;
  nlohmann::json learner = {{"eps", l.eps},
                            {"delta", l.delta},
                            {"degree_cap", l.degree_cap},
                            {"max_features", l.max_features},
                            {"outer_samples", l.outer_samples},
                            {"estimator", to_string(l.estimator)},
                            {"l1_solver", l.l1_method == L1Method::interior_point ? "interior_point" : "subgradient"},
                            {"norm_bound", l.norm_bound},
                            {"erm_constant", l.erm_constant},
                            {"max_candidates", l.max_candidates},
                            {"allow_shortcut", l.allow_shortcut}};
  nlohmann::json cls = nlohmann::json::object();
  if (l.M) cls["M"] = *l.M;
  if (l.L) cls["L"] = *l.L;
  if (l.gamma) cls["gamma"] = *l.gamma;
  if (l.k) cls["k"] = *l.k;
  if (!cls.empty()) learner["class"] = cls;
  if (l.rho) learner["rho"] = *l.rho;
  if (l.rho_constant) learner["rho_constant"] = *l.rho_constant;
  if (l.eta) learner["eta"] = *l.eta;
  if (l.degree) learner["degree"] = *l.degree;
  if (l.inner_from_planner)
    learner["inner_samples"] = "planner";
  else if (l.inner_samples)
    learner["inner_samples"] = *l.inner_samples;
  if (l.regression_samples) learner["regression_samples"] = *l.regression_samples;
  if (l.resolution) learner["resolution"] = *l.resolution;
  if (l.erm_samples) learner["erm_samples"] = *l.erm_samples;
  nlohmann::json j = {{"mode", to_string(l.mode)},
                      {"seed", cfg.seed},
                      {"target", cfg.target},
                      {"corruption", cfg.corruption},
                      {"learner", learner},
                      {"evaluation", {{"test_samples", cfg.test_samples}}},
                      {"deterministic", cfg.deterministic}};
  nlohmann::json budget = nlohmann::json::object();
  if (cfg.query_budget != BudgetLedger::kUnlimited) budget["queries"] = cfg.query_budget;
  if (cfg.sample_budget != BudgetLedger::kUnlimited) budget["samples"] = cfg.sample_budget;
  if (!budget.empty()) j["budget"] = budget;
  if (cfg.baseline_degree >= 0) j["baseline"] = {{"degree", cfg.baseline_degree}};
  return j;
}

ResolvedParameters resolve_parameters(const LearnerConfig& cfg, const ClassParameters& base, Index ambient_dim) {
  ResolvedParameters p;
  p.cls = effective_class(cfg, base);
  const double eps = cfg.eps;
  p.outer_samples = cfg.outer_samples;
  p.regression_samples = cfg.regression_samples.value_or(4 * cfg.outer_samples);
  switch (cfg.mode) {
    case LearnerMode::real_mim:
      if (!(p.cls.M > 0 && p.cls.L > 0 && p.cls.k > 0)) throw ParameterError("real path: M, L, k must be positive");
      p.truncation = std::sqrt(p.cls.M / eps);
      p.rho = cfg.rho.value_or(cfg.rho_constant.value_or(1.0) * eps * eps);
      p.eta = cfg.eta.value_or(select_threshold(ThresholdMode::real, eps, p.cls.k, p.cls.M));
      p.degree = cfg.degree.value_or(0);
      if (!cfg.degree) p.degree = degree_for(LabelMode::real, p.cls.L, eps, cfg.degree_cap, &p.warnings);
      break;
    case LearnerMode::boolean_mim:
      if (!(p.cls.gamma > 0 && p.cls.k > 0)) throw ParameterError("Boolean path: Gamma, k must be positive");
      p.truncation = 1;
      p.rho = cfg.rho.value_or(cfg.rho_constant.value_or(1.0 / 32) * eps / p.cls.gamma);
      p.eta = cfg.eta.value_or(select_threshold(ThresholdMode::boolean, eps, p.cls.k));
      p.degree = cfg.degree.value_or(0);
      if (!cfg.degree) p.degree = degree_for(LabelMode::boolean, p.cls.gamma, eps, cfg.degree_cap, &p.warnings);
      break;
    case LearnerMode::proper_ltf:
    case LearnerMode::proper_relu: {
      const bool relu = cfg.mode == LearnerMode::proper_relu;
      p.truncation = relu ? std::sqrt(cfg.norm_bound / eps) : 1.0;
      p.rho = cfg.rho.value_or(eps * eps / 32);
      p.eta = cfg.eta.value_or(relu ? eps * eps / (32 * cfg.norm_bound) : eps * eps / 32);
      break;
    }
  }
  if (!(p.rho > 0 && p.rho < 1)) throw ParameterError("resolved rho " + std::to_string(p.rho) + " outside (0, 1)");
  if (cfg.inner_from_planner) {
    const std::uint64_t n = gradient_sample_count(ambient_dim, p.truncation, p.rho, eps, cfg.delta);
    if (n > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
      throw SizeError("planner inner sample count overflows");
    p.inner_samples = static_cast<Index>(n);
  } else {
    p.inner_samples = cfg.inner_samples.value_or(1000);
  }
  return p;
}

ProperConfig proper_config(const LearnerConfig& cfg) {
  ProperConfig pc;
  pc.eps = cfg.eps;
  pc.delta = cfg.delta;
  pc.rho = cfg.rho;
  pc.eta = cfg.eta;
  pc.resolution = cfg.resolution;
  pc.norm_bound = cfg.norm_bound;
  pc.outer_samples = cfg.outer_samples;
  pc.inner_samples = cfg.inner_samples.value_or(1000);
  pc.estimator = cfg.estimator;
  pc.erm_samples = cfg.erm_samples;
  pc.erm_constant = cfg.erm_constant;
  pc.max_candidates = cfg.max_candidates;
  pc.allow_shortcut = cfg.allow_shortcut;
  return pc;
}

BudgetPrediction predict_budget(const ExperimentConfig& cfg, Index subspace_dim) {
  const LearnerConfig& l = cfg.learner;
  const Index d = cfg.target.ambient_dim();
  BudgetPrediction b;
  if (l.mode == LearnerMode::real_mim || l.mode == LearnerMode::boolean_mim) {
    const ResolvedParameters p = resolve_parameters(l, class_parameters(cfg.target), d);
    const std::uint64_t per_point = static_cast<std::uint64_t>(p.inner_samples) *
                                    (l.estimator == InfluenceEstimator::paired ? 2u : 1u);
    b.queries = static_cast<std::uint64_t>(p.outer_samples) * per_point;
    b.samples = static_cast<std::uint64_t>(p.outer_samples + p.regression_samples);
    return b;
  }
  const ProperConfig pc = proper_config(l);
  const CandidateKind kind = l.mode == LearnerMode::proper_ltf ? CandidateKind::ltf : CandidateKind::relu;
  const CoverSpec ambient{Subspace::full(d), pc.resolution.value_or(pc.eps), pc.norm_bound, -1, kind,
                          pc.max_candidates};
  if (pc.allow_shortcut && cover_size(ambient) <= static_cast<double>(pc.max_candidates)) {
    b.samples = static_cast<std::uint64_t>(erm_sample_count(kind, d, pc));
    return b;
  }
  b.queries = static_cast<std::uint64_t>(pc.outer_samples) * static_cast<std::uint64_t>(pc.inner_samples) *
              (pc.estimator == InfluenceEstimator::paired ? 2u : 1u);
  b.samples = static_cast<std::uint64_t>(pc.outer_samples + erm_sample_count(kind, subspace_dim, pc));
  return b;
}

namespace {

MimResult learn_mim(LabelOracle& oracle, const LearnerConfig& cfg, const ClassParameters& cls, RandomStream& rng,
                    LabelMode mode) {
  if (oracle.mode() != mode) throw ParameterError("learner: oracle label mode does not match the learner");
  MimResult res;
  res.params = resolve_parameters(cfg, cls, oracle.ambient_dim());
  const ResolvedParameters& p = res.params;
  LabelOracle working = mode == LabelMode::real ? oracle.truncated(p.truncation) : oracle;

  auto t0 = Clock::now();
  working.ledger().set_stage("influence-estimation");
  RandomStream influence_rng = rng.derived(1);
  const SmoothingParams sp{p.rho, p.inner_samples, cfg.delta, p.truncation};
  res.influence = estimate_influence(working, sp, p.outer_samples, influence_rng, cfg.estimator);
  res.timings_ms.emplace_back("influence", elapsed_ms(t0));

  t0 = Clock::now();
  res.selection = top_subspace(res.influence, p.eta);
  res.timings_ms.emplace_back("subspace", elapsed_ms(t0));

  t0 = Clock::now();
  working.ledger().set_stage("regression-sampling");
  RandomStream regression_rng = rng.derived(2);
  working.draw_samples(p.regression_samples, regression_rng, res.regression_points, res.regression_labels);
  working.ledger().set_stage("");
  const Subspace& v = res.selection.subspace;
  const int degree = degree_within_features(v.dim(), p.degree, cfg.max_features);
  if (degree < p.degree)
    res.fit.warnings.push_back("degree lowered from " + std::to_string(p.degree) + " to " + std::to_string(degree) +
                               " to keep at most " + std::to_string(cfg.max_features) + " features");
  if (mode == LabelMode::real) {
    res.polynomial = l2_fit(res.regression_points, res.regression_labels, v, degree, &res.fit);
    res.train_error = empirical_error(res.polynomial, res.regression_points, res.regression_labels, LossMode::l22);
  } else {
    L1SolverOptions opt;
    opt.method = cfg.l1_method;
    res.polynomial = l1_fit_polynomial(res.regression_points, res.regression_labels, v, degree, opt, &res.fit);
    res.train_error = empirical_error(BooleanHypothesis(res.polynomial), res.regression_points,
                                      res.regression_labels, LossMode::zero_one);
  }
  res.timings_ms.emplace_back("fit", elapsed_ms(t0));
  return res;
}

}  // namespace

MimResult learn_real_mim(LabelOracle& oracle, const LearnerConfig& cfg, const ClassParameters& cls,
                         RandomStream& rng) {
  return learn_mim(oracle, cfg, cls, rng, LabelMode::real);
}

MimResult learn_boolean_mim(LabelOracle& oracle, const LearnerConfig& cfg, const ClassParameters& cls,
                            RandomStream& rng) {
  return learn_mim(oracle, cfg, cls, rng, LabelMode::boolean);
}

PolynomialHypothesis replay_regression(const InfluenceEstimate& influence, double eta, const Matrix& points,
                                       const Vector& labels, int degree, LabelMode mode,
                                       const L1SolverOptions& options) {
  const SubspaceSelection sel = top_subspace(influence, eta);
  if (mode == LabelMode::real) return l2_fit(points, labels, sel.subspace, degree);
  return l1_fit_polynomial(points, labels, sel.subspace, degree, options);
}

namespace {

ExperimentReport base_report(const ExperimentConfig& cfg) {
  ExperimentReport r;
  r.mode = to_string(cfg.learner.mode);
  r.seed = cfg.seed;
  r.dim = cfg.target.ambient_dim();
  r.eps = cfg.learner.eps;
  r.delta = cfg.learner.delta;
  r.loss = to_string(loss_for(cfg.learner.mode));
  r.test_samples = cfg.test_samples;
  r.config = config_to_json(cfg);
  return r;
}

void evaluate(const ExperimentConfig& cfg, const LabelOracle& oracle,
              const std::function<Vector(const Matrix&)>& predict, ExperimentReport& r) {
  const auto t0 = Clock::now();
  RandomStream test_rng = RandomStream(cfg.seed).derived(3);
  const Matrix x = sample_standard_normal_rows(cfg.test_samples, r.dim, test_rng);
  Vector y(x.rows());
  for (Index i = 0; i < x.rows(); ++i) y(i) = oracle.label(x.row(i).transpose());
  const Vector pred = predict(x);
  const LossMode loss = loss_for(cfg.learner.mode);
  double acc = 0;
  for (Index i = 0; i < x.rows(); ++i) acc += loss_value(loss, pred(i), y(i));
  r.test_error = acc / static_cast<double>(x.rows());
  r.opt_upper_bound = opt_error(oracle, loss, x);
  r.excess = r.test_error - r.opt_upper_bound;
  r.timings_ms.emplace_back("evaluation", elapsed_ms(t0));
}

void record_angles(const ExperimentConfig& cfg, const Subspace& v, ExperimentReport& r) {
  r.dim_v = v.dim();
  r.principal_angles = principal_angles(relevant_subspace(cfg.target), v);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, ExperimentArtifacts* artifacts) {
  ExperimentReport r = base_report(cfg);
  auto ledger = std::make_shared<BudgetLedger>(cfg.query_budget, cfg.sample_budget);
  LabelOracle oracle(cfg.target, cfg.corruption, ledger);
  const ClassParameters cls = class_parameters(cfg.target);
  RandomStream rng(cfg.seed);
  std::function<Vector(const Matrix&)> predict;

  if (cfg.learner.mode == LearnerMode::real_mim || cfg.learner.mode == LearnerMode::boolean_mim) {
    const bool real = cfg.learner.mode == LearnerMode::real_mim;
    MimResult res = real ? learn_real_mim(oracle, cfg.learner, cls, rng) : learn_boolean_mim(oracle, cfg.learner, cls, rng);
    const ResolvedParameters& p = res.params;
    r.k = p.cls.k;
    r.rho = p.rho;
    r.eta = p.eta;
    r.degree = res.polynomial.degree();
    r.outer_samples = p.outer_samples;
    r.inner_samples = p.inner_samples;
    r.fit_samples = p.regression_samples;
    r.eigenvalues = res.selection.eigenvalues;
    r.train_error = res.train_error;
    r.timings_ms = res.timings_ms;
    r.warnings = p.warnings;
    r.warnings.insert(r.warnings.end(), res.selection.warnings.begin(), res.selection.warnings.end());
    r.warnings.insert(r.warnings.end(), res.fit.warnings.begin(), res.fit.warnings.end());
    record_angles(cfg, res.selection.subspace, r);
    r.hypothesis = res.polynomial;
    if (real)
      predict = [poly = res.polynomial](const Matrix& x) { return poly.evaluate_rows(x); };
    else
      predict = [h = BooleanHypothesis(res.polynomial)](const Matrix& x) { return h.evaluate_rows(x); };
    if (artifacts) {
      artifacts->influence = res.influence;
      artifacts->fit_points = std::move(res.regression_points);
      artifacts->fit_labels = std::move(res.regression_labels);
    }
  } else {
    const ProperConfig pc = proper_config(cfg.learner);
    const auto t0 = Clock::now();
    ProperResult res = cfg.learner.mode == LearnerMode::proper_ltf ? proper_learn_ltf(oracle, pc, rng)
                                                                   : proper_learn_relu(oracle, pc, rng);
    r.timings_ms.emplace_back("learn", elapsed_ms(t0));
    r.k = 1;
    r.rho = res.rho;
    r.eta = res.eta;
    r.outer_samples = res.shortcut ? 0 : pc.outer_samples;
    r.inner_samples = res.shortcut ? 0 : pc.inner_samples;
    r.fit_samples = res.erm_samples;
    r.eigenvalues = res.eigenvalues;
    r.train_error = res.erm_loss;
    r.shortcut = res.shortcut;
    r.candidate_count = res.candidate_count;
    r.warnings = res.warnings;
    record_angles(cfg, res.subspace, r);
    r.hypothesis = res.candidate;
    predict = [c = res.candidate](const Matrix& x) {
      Vector out(x.rows());
      for (Index i = 0; i < x.rows(); ++i) out(i) = c(x.row(i).transpose());
      return out;
    };
    if (artifacts && res.influence) artifacts->influence = res.influence;
  }
  r.queries_used = ledger->queries_used();
  r.samples_used = ledger->samples_used();
  r.predicted = predict_budget(cfg, r.dim_v);
  evaluate(cfg, oracle, predict, r);
  return r;
}

BaselineComparison compare_baseline(const ExperimentConfig& cfg) {
  if (cfg.learner.mode != LearnerMode::real_mim && cfg.learner.mode != LearnerMode::boolean_mim)
    throw ConfigError("mode", "baseline comparison supports real_mim and boolean_mim");
  BaselineComparison out;
  out.pipeline = run_experiment(cfg);
  const std::uint64_t budget = out.pipeline.queries_used + out.pipeline.samples_used;

  ExperimentReport& b = out.baseline;
  b = base_report(cfg);
  b.mode = "baseline_" + b.mode;
  auto ledger = std::make_shared<BudgetLedger>(0, budget);
  LabelOracle oracle(cfg.target, cfg.corruption, ledger);
  const auto t0 = Clock::now();
  RandomStream rng = RandomStream(cfg.seed).derived(4);
  Matrix x;
  Vector y;
  oracle.draw_samples(static_cast<Index>(budget), rng, x, y);
  const int degree = cfg.baseline_degree >= 0 ? static_cast<int>(cfg.baseline_degree) : out.pipeline.degree;
  const Subspace full = Subspace::full(b.dim);
  FitDiagnostics diag;
  PolynomialHypothesis poly;
  const bool real = cfg.learner.mode == LearnerMode::real_mim;
  if (real) {
    poly = l2_fit(x, y, full, degree, &diag);
    b.train_error = empirical_error(poly, x, y, LossMode::l22);
  } else {
    L1SolverOptions opt;
    opt.method = cfg.learner.l1_method;
    poly = l1_fit_polynomial(x, y, full, degree, opt, &diag);
    b.train_error = empirical_error(BooleanHypothesis(poly), x, y, LossMode::zero_one);
  }
  b.timings_ms.emplace_back("fit", elapsed_ms(t0));
  b.k = out.pipeline.k;
  b.degree = degree;
  b.fit_samples = static_cast<Index>(budget);
  b.samples_used = ledger->samples_used();
  b.predicted.samples = budget;
  b.dim_v = b.dim;
  b.warnings = diag.warnings;
  if (real)
    evaluate(cfg, oracle, [&](const Matrix& pts) { return poly.evaluate_rows(pts); }, b);
  else
    evaluate(cfg, oracle, [h = BooleanHypothesis(poly)](const Matrix& pts) { return h.evaluate_rows(pts); }, b);
  out.separated = out.pipeline.excess <= cfg.learner.eps && b.excess > cfg.learner.eps;
  return out;
}

nlohmann::json report_to_json(const ExperimentReport& r, bool include_timings) {
  nlohmann::json j = {{"mode", r.mode},
                      {"seed", r.seed},
                      {"dim", r.dim},
                      {"k", r.k},
                      {"eps", r.eps},
                      {"delta", r.delta},
                      {"rho", r.rho},
                      {"eta", r.eta},
                      {"degree", r.degree},
                      {"outer_samples", r.outer_samples},
                      {"inner_samples", r.inner_samples},
                      {"fit_samples", r.fit_samples},
                      {"queries_used", r.queries_used},
                      {"samples_used", r.samples_used},
                      {"predicted_queries", r.predicted.queries},
                      {"predicted_samples", r.predicted.samples},
                      {"dim_v", r.dim_v},
                      {"eigenvalues", vector_to_json(r.eigenvalues)},
                      {"principal_angles", vector_to_json(r.principal_angles)},
                      {"loss", r.loss},
                      {"train_error", r.train_error},
                      {"test_error", r.test_error},
                      {"opt_upper_bound", r.opt_upper_bound},
                      {"excess", r.excess},
                      {"test_samples", r.test_samples},
                      {"shortcut", r.shortcut},
                      {"candidate_count", r.candidate_count},
                      {"warnings", r.warnings},
                      {"hypothesis", r.hypothesis},
                      {"config", r.config}};
  if (include_timings) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [stage, ms] : r.timings_ms) t[stage] = ms;
    j["timings_ms"] = t;
  }
  return j;
}

std::string csv_header() {
  return "mode,d,k,eps,seed,dimV,Nq,Ns,train_err,test_err,opt_ub,excess,wall_ms_influence,wall_ms_subspace,"
         "wall_ms_fit,wall_ms_learn,wall_ms_evaluation";
}

std::string csv_row(const ExperimentReport& r) {
  auto timing = [&](const std::string& stage) {
    for (const auto& [s, ms] : r.timings_ms)
      if (s == stage) return ms;
    return 0.0;
  };
  std::ostringstream os;
  os.precision(10);
  os << r.mode << ',' << r.dim << ',' << r.k << ',' << r.eps << ',' << r.seed << ',' << r.dim_v << ','
     << r.queries_used << ',' << r.samples_used << ',' << r.train_error << ',' << r.test_error << ','
     << r.opt_upper_bound << ',' << r.excess << ',' << timing("influence") << ',' << timing("subspace") << ','
     << timing("fit") << ',' << timing("learn") << ',' << timing("evaluation");
  return os.str();
}

void write_outputs(const std::string& dir, const ExperimentReport& report, const ExperimentArtifacts* artifacts,
                   bool deterministic) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root);
  write_file(root / "report.json", report_to_json(report, !deterministic).dump(2) + "\n");
  if (deterministic) {
    ExperimentReport untimed = report;
    untimed.timings_ms.clear();
    write_file(root / "summary.csv", csv_header() + "\n" + csv_row(untimed) + "\n");
  } else {
    write_file(root / "summary.csv", csv_header() + "\n" + csv_row(report) + "\n");
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [stage, ms] : report.timings_ms) t[stage] = ms;
    write_file(root / "timings.json", t.dump(2) + "\n");
  }
  if (artifacts) {
    if (artifacts->influence) write_file(root / "influence.json", nlohmann::json(*artifacts->influence).dump() + "\n");
    if (artifacts->fit_points.size())
      write_file(root / "fit_samples.json", points_to_json(artifacts->fit_points, artifacts->fit_labels).dump() + "\n");
  }
}

FidelityCheck smoothing_fidelity(const TargetSpec& target, const CorruptionSpec& corruption,
                                 const std::function<double(const Eigen::Ref<const Vector>&)>& h, LossMode loss,
                                 double rho, Index n, Index inner, double bound, RandomStream& rng) {
  LabelOracle harness(target, corruption);
  const SmoothingParams sp{rho, inner, 0.05, 1.0};
  FidelityCheck out;
  out.bound = bound;
  for (Index i = 0; i < n; ++i) {
    const Vector x = sample_standard_normal(harness.ambient_dim(), rng);
    const double hx = h(x);
    out.raw_error += loss_value(loss, hx, harness.label(x));
    out.smoothed_error += loss_value(loss, hx, smoothed_value(harness, x, sp, rng));
  }
  out.raw_error /= static_cast<double>(n);
  out.smoothed_error /= static_cast<double>(n);
  return out;
}

}  // namespace mimq
