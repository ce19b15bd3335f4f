#include "mimq/proper.hpp"

#include "mimq/json_util.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace mimq {

namespace {

int circle_count(double pitch) { return std::max(1, static_cast<int>(std::ceil(2 * std::numbers::pi / pitch - 1e-9))); }
int polar_intervals(double pitch) { return std::max(1, static_cast<int>(std::ceil(std::numbers::pi / pitch - 1e-9))); }

void sphere_grid_into(Index dim, double pitch, std::vector<Vector>& out) {
  if (dim == 1) {
    out.push_back(Vector::Constant(1, 1.0));
    out.push_back(Vector::Constant(1, -1.0));
    return;
  }
  if (dim == 2) {
    const int n = circle_count(pitch);
    for (int j = 0; j < n; ++j) {
      const double phi = 2 * std::numbers::pi * j / n;
      Vector v(2);
      v << std::cos(phi), std::sin(phi);
      out.push_back(v);
    }
    return;
  }
  const int n = polar_intervals(pitch);
  for (int i = 0; i <= n; ++i) {
    const double theta = std::numbers::pi * i / n;
    const double s = std::sin(theta);
    if (i == 0 || i == n) {
      Vector v = Vector::Zero(dim);
      v(0) = i == 0 ? 1.0 : -1.0;
      out.push_back(v);
      continue;
    }
    std::vector<Vector> sub;
    sphere_grid_into(dim - 1, pitch / s, sub);
    for (const Vector& u : sub) {
      Vector v(dim);
      v(0) = std::cos(theta);
      v.tail(dim - 1) = s * u;
      out.push_back(v);
    }
  }
}

// stops counting once the total passes limit
double sphere_count(Index dim, double pitch, double limit) {
  if (dim == 1) return 2;
  if (dim == 2) return circle_count(pitch);
  const int n = polar_intervals(pitch);
  double total = 2;
  for (int i = 1; i < n && total <= limit; ++i)
    total += sphere_count(dim - 1, pitch / std::sin(std::numbers::pi * i / n), limit - total);
  return total > limit ? std::numeric_limits<double>::infinity() : total;
}

}  // namespace

double Candidate::operator()(const Eigen::Ref<const Vector>& x) const {
  const double pre = direction.dot(x) + bias;
  if (kind == CandidateKind::ltf) return sign_of(pre);
  return pre > 0 ? scale * pre : 0.0;
}

double default_threshold_range(double resolution) {
  if (!(resolution > 0 && resolution < 4)) throw ParameterError("threshold range: resolution must lie in (0, 4)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2 * (1 - resolution / 4));
}

// adjacent biases differ by at most `resolution` in Gaussian L1 distance
double bias_step(double resolution) { return resolution * std::sqrt(2 * std::numbers::pi) / 2; }

std::vector<Vector> sphere_grid(Index dim, double pitch) {
  if (dim < 0) throw ParameterError("sphere_grid: negative dimension");
  if (!(pitch > 0)) throw ParameterError("sphere_grid: pitch must be positive");
  std::vector<Vector> out;
  if (dim > 0) sphere_grid_into(dim, pitch, out);
  return out;
}

double sphere_grid_size(Index dim, double pitch, double limit) {
  if (dim <= 0) return 0;
  if (!(pitch > 0)) throw ParameterError("sphere_grid: pitch must be positive");
  return sphere_count(dim, pitch, limit);
}

Vector bias_grid(double range, double resolution) {
  if (!(range > 0)) return Vector::Zero(1);
  const Index n = static_cast<Index>(std::ceil(2 * range / bias_step(resolution) - 1e-9)) + 1;
  return Vector::LinSpaced(n, -range, range);
}

Vector scale_grid(double resolution, double norm_bound) {
  if (!(norm_bound > 0)) throw ParameterError("scale_grid: norm bound must be positive");
  std::vector<double> s;
  for (double v = resolution * norm_bound; v < norm_bound * (1 - 1e-12); v *= 1 + resolution) s.push_back(v);
  s.push_back(norm_bound);
  return Eigen::Map<Vector>(s.data(), static_cast<Index>(s.size()));
}

double cover_size(const CoverSpec& spec) {
  if (!(spec.resolution > 0)) throw ParameterError("cover: resolution must be positive");
  const double range = spec.threshold_range < 0 ? default_threshold_range(spec.resolution) : spec.threshold_range;
  const double biases = static_cast<double>(bias_grid(range, spec.resolution).size());
  const double scales =
      spec.kind == CandidateKind::relu ? static_cast<double>(scale_grid(spec.resolution, spec.norm_bound).size()) : 1;
  const double dirs =
      sphere_grid_size(spec.subspace.dim(), spec.resolution, static_cast<double>(spec.max_candidates) / (biases * scales));
  return dirs * biases * scales;
}

// Directions come from a hyperspherical-coordinate grid on the unit sphere of V.
std::vector<Candidate> build_cover(const CoverSpec& spec) {
  if (spec.subspace.dim() == 0) throw ParameterError("build_cover: subspace must have dimension at least 1");
  const double count = cover_size(spec);
  if (count > static_cast<double>(spec.max_candidates))
    throw SizeError("build_cover: more than " + std::to_string(spec.max_candidates) +
                    " candidates; use a larger resolution");
  const double range = spec.threshold_range < 0 ? default_threshold_range(spec.resolution) : spec.threshold_range;
  const Vector biases = bias_grid(range, spec.resolution);
  const Vector scales =
      spec.kind == CandidateKind::relu ? scale_grid(spec.resolution, spec.norm_bound) : Vector::Ones(1);
  std::vector<Vector> dirs;
  for (const Vector& u : sphere_grid(spec.subspace.dim(), spec.resolution)) dirs.push_back(spec.subspace.basis() * u);
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(count));
  for (const Vector& v : dirs)
    for (Index b = 0; b < biases.size(); ++b)
      for (Index s = 0; s < scales.size(); ++s) out.push_back({spec.kind, v, biases(b), scales(s)});
  return out;
}

ErmResult erm_select(const std::vector<Candidate>& candidates, const Matrix& points, const Vector& labels,
                     LossMode loss) {
  if (candidates.empty()) throw ParameterError("erm_select: empty candidate set");
  if (points.rows() != labels.size()) throw DimensionError("erm_select: point and label counts differ");
  if (points.rows() == 0) throw ParameterError("erm_select: no data");
  ErmResult best;
  best.loss = std::numeric_limits<double>::infinity();
  Vector proj;
  const Vector* last = nullptr;
  const double n = static_cast<double>(points.rows());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Candidate& cand = candidates[c];
    if (cand.direction.size() != points.cols()) throw DimensionError("erm_select: candidate dimension mismatch");
    if (!last || last->size() != cand.direction.size() || *last != cand.direction) {
      proj = points * cand.direction;
      last = &cand.direction;
    }
    double acc = 0;
    for (Index i = 0; i < proj.size(); ++i) {
      const double pre = proj(i) + cand.bias;
      const double pred = cand.kind == CandidateKind::ltf ? sign_of(pre) : (pre > 0 ? cand.scale * pre : 0.0);
      acc += loss_value(loss, pred, labels(i));
    }
    acc /= n;
    if (acc < best.loss) {
      best.loss = acc;
      best.index = static_cast<Index>(c);
    }
  }
  return best;
}

void ProperConfig::validate() const {
  if (!(eps > 0 && eps < 1)) throw ParameterError("proper learner: eps must lie in (0, 1)");
  if (!(delta > 0 && delta < 1)) throw ParameterError("proper learner: delta must lie in (0, 1)");
  if (!(norm_bound > 0)) throw ParameterError("proper learner: norm bound must be positive");
  if (outer_samples <= 0 || inner_samples <= 0) throw ParameterError("proper learner: sample counts must be positive");
  if (erm_constant <= 0) throw ParameterError("proper learner: ERM constant must be positive");
}

Index erm_sample_count(CandidateKind kind, Index subspace_dim, const ProperConfig& cfg) {
  if (cfg.erm_samples) return *cfg.erm_samples;
  const double r = static_cast<double>(std::max<Index>(subspace_dim, 1));
  const double m = kind == CandidateKind::relu ? cfg.norm_bound : 1.0;
  return static_cast<Index>(std::ceil(cfg.erm_constant * m * r / (cfg.eps * cfg.eps) * std::log(1 / cfg.delta)));
}

namespace {

ProperResult proper_learn(LabelOracle& oracle, const ProperConfig& cfg, RandomStream& rng, CandidateKind kind) {
  cfg.validate();
  const Index d = oracle.ambient_dim();
  ProperResult res;
  const double base = cfg.eps * cfg.eps / 32;
  res.rho = cfg.rho.value_or(base);
  res.eta = cfg.eta.value_or(kind == CandidateKind::relu ? base / cfg.norm_bound : base);
  const double resolution = cfg.resolution.value_or(cfg.eps);

  LabelOracle working = kind == CandidateKind::relu ? oracle.truncated(std::sqrt(cfg.norm_bound / cfg.eps)) : oracle;
  CoverSpec spec{Subspace::full(d), resolution, cfg.norm_bound, -1, kind, cfg.max_candidates};

  if (cfg.allow_shortcut && cover_size(spec) <= static_cast<double>(cfg.max_candidates)) {
    res.shortcut = true;
    res.subspace = Subspace::full(d);
  } else {
    working.ledger().set_stage("influence-estimation");
    const double label_bound = kind == CandidateKind::relu ? std::sqrt(cfg.norm_bound / cfg.eps) : 1.0;
    SmoothingParams params{res.rho, cfg.inner_samples, cfg.delta, label_bound};
    RandomStream stream = rng.derived(1);
    res.influence = estimate_influence(working, params, cfg.outer_samples, stream, cfg.estimator);
    SubspaceSelection sel = top_subspace(*res.influence, res.eta);
    res.warnings.insert(res.warnings.end(), sel.warnings.begin(), sel.warnings.end());
    res.eigenvalues = sel.eigenvalues;
    res.subspace = sel.subspace;
    if (res.subspace.dim() == 0) {
      res.warnings.push_back("no eigenvalue above threshold; using the top eigenvector");
      res.subspace = Subspace(Matrix(sel.eigenvectors.leftCols(1)), Vector(sel.eigenvalues.head(1)));
    }
    spec.subspace = res.subspace;
  }

  const std::vector<Candidate> cover = build_cover(spec);
  res.candidate_count = cover.size();
  res.erm_samples = erm_sample_count(kind, res.subspace.dim(), cfg);
  working.ledger().set_stage("erm-sampling");
  Matrix x;
  Vector y;
  RandomStream erm_stream = rng.derived(2);
  working.draw_samples(res.erm_samples, erm_stream, x, y);
  working.ledger().set_stage("");
  const ErmResult best = erm_select(cover, x, y, kind == CandidateKind::ltf ? LossMode::zero_one : LossMode::l22);
  res.candidate = cover[static_cast<std::size_t>(best.index)];
  res.erm_loss = best.loss;
  return res;
}

}  // namespace

ProperResult proper_learn_ltf(LabelOracle& oracle, const ProperConfig& cfg, RandomStream& rng) {
  if (oracle.mode() != LabelMode::boolean) throw ParameterError("proper_learn_ltf: oracle labels must be Boolean");
  return proper_learn(oracle, cfg, rng, CandidateKind::ltf);
}

ProperResult proper_learn_relu(LabelOracle& oracle, const ProperConfig& cfg, RandomStream& rng) {
  if (oracle.mode() != LabelMode::real) throw ParameterError("proper_learn_relu: oracle labels must be real");
  return proper_learn(oracle, cfg, rng, CandidateKind::relu);
}

std::string to_string(CandidateKind k) { return k == CandidateKind::ltf ? "ltf" : "relu"; }

void to_json(nlohmann::json& j, const Candidate& c) {
  j = {{"kind", to_string(c.kind)}, {"direction", vector_to_json(c.direction)}, {"bias", c.bias}, {"scale", c.scale}};
}

void from_json(const nlohmann::json& j, Candidate& c) {
  JsonReader r(j, "candidate");
  const std::string kind = r.required<std::string>("kind");
  if (kind == "ltf")
    c.kind = CandidateKind::ltf;
  else if (kind == "relu")
    c.kind = CandidateKind::relu;
  else
    throw ConfigError(r.path("kind"), "expected 'ltf' or 'relu'");
  c.direction = vector_from_json(r.child("direction"), r.path("direction"));
  c.bias = r.required<double>("bias");
  c.scale = r.optional<double>("scale", 1.0);
}

}  // namespace mimq
