#include "mimq/oracle.hpp"

#include "mimq/json_util.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace mimq {

namespace {

double relu(double t) { return t > 0 ? t : 0.0; }

double unit_pre(const TargetSpec& t, Index i, const Eigen::Ref<const Vector>& x) {
  const double th = t.thresholds.size() ? t.thresholds(i) : 0.0;
  return t.weights.row(i).dot(x) - th;
}

Vector deep_forward(const TargetSpec& t, const Eigen::Ref<const Vector>& x, std::vector<Vector>* pre) {
  Vector h = x;
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    Vector z = t.layers[l] * h;
    if (pre) pre->push_back(z);
    if (l + 1 < t.layers.size())
      h = z.cwiseMax(0.0);
    else
      h = z;
  }
  return h;
}

double ptf_value(const TargetSpec& t, const Eigen::Ref<const Vector>& x) {
  double acc = 0;
  for (const PtfTerm& term : t.polynomial) {
    double m = term.coefficient;
    for (std::size_t i = 0; i < term.exponents.size(); ++i)
      if (term.exponents[i]) m *= std::pow(unit_pre(t, static_cast<Index>(i), x), term.exponents[i]);
    acc += m;
  }
  return acc;
}

Index matrix_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(1e-10);
  return qr.rank();
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

std::shared_ptr<BudgetLedger> ensure(std::shared_ptr<BudgetLedger> l) {
  return l ? l : std::make_shared<BudgetLedger>();
}

}  // namespace

Index TargetSpec::ambient_dim() const {
  if (variant == TargetVariant::deep_relu_net) return layers.empty() ? 0 : layers.front().cols();
  return weights.cols();
}

Index TargetSpec::unit_count() const {
  if (variant == TargetVariant::deep_relu_net) return layers.empty() ? 0 : layers.front().rows();
  return weights.rows();
}

LabelMode TargetSpec::mode() const {
  switch (variant) {
    case TargetVariant::ltf:
    case TargetVariant::intersection_halfspaces:
    case TargetVariant::function_of_halfspaces:
    case TargetVariant::lowdim_ptf:
      return LabelMode::boolean;
    default:
      return LabelMode::real;
  }
}

void TargetSpec::validate() const {
  const std::string name = to_string(variant);
  if (variant == TargetVariant::deep_relu_net) {
    if (layers.size() < 2) throw ParameterError(name + ": needs at least two layers");
    for (std::size_t l = 1; l < layers.size(); ++l)
      if (layers[l].cols() != layers[l - 1].rows())
        throw DimensionError(name + ": layer " + std::to_string(l) + " shape mismatch");
    if (layers.back().rows() != 1) throw DimensionError(name + ": output layer must have one row");
    for (const Matrix& w : layers) {
      if (!w.allFinite()) throw NumericError(name + ": non-finite weights");
      if (norm_bound && operator_norm(w) > *norm_bound * (1 + 1e-12))
        throw ParameterError(name + ": layer operator norm exceeds declared bound");
    }
    if (width_bound)
      for (std::size_t l = 0; l + 1 < layers.size(); ++l)
        if (layers[l].rows() > *width_bound) throw ParameterError(name + ": layer width exceeds declared bound");
    return;
  }
  if (weights.rows() == 0 || weights.cols() == 0) throw DimensionError(name + ": empty weight matrix");
  if (!weights.allFinite()) throw NumericError(name + ": non-finite weights");
  if (thresholds.size() != 0 && thresholds.size() != weights.rows())
    throw DimensionError(name + ": threshold count does not match unit count");
  switch (variant) {
    case TargetVariant::relu:
    case TargetVariant::ltf:
    case TargetVariant::lipschitz_sim:
      if (weights.rows() != 1) throw DimensionError(name + ": expects a single weight vector");
      break;
    case TargetVariant::linear_comb_relus:
      if (output_weights.size() != weights.rows())
        throw DimensionError(name + ": output weight count does not match unit count");
      break;
    case TargetVariant::function_of_halfspaces:
      if (weights.rows() > 20) throw SizeError(name + ": too many halfspaces for a truth table");
      if (truth_table.size() != (std::size_t{1} << weights.rows()))
        throw DimensionError(name + ": truth table must have 2^k entries");
      for (int v : truth_table)
        if (v != 1 && v != -1) throw ParameterError(name + ": truth table entries must be +1 or -1");
      break;
    case TargetVariant::lowdim_ptf:
      if (polynomial.empty()) throw ParameterError(name + ": empty polynomial");
      for (const PtfTerm& term : polynomial)
        if (static_cast<Index>(term.exponents.size()) != weights.rows())
          throw DimensionError(name + ": monomial exponent count does not match unit count");
      break;
    default:
      break;
  }
  if (variant == TargetVariant::lipschitz_sim) (void)link_value(link, 0.0);
  if (norm_bound && (variant == TargetVariant::relu || variant == TargetVariant::sum_relus ||
                     variant == TargetVariant::linear_comb_relus || variant == TargetVariant::lipschitz_sim))
    for (Index i = 0; i < weights.rows(); ++i)
      if (weights.row(i).norm() > *norm_bound * (1 + 1e-12))
        throw ParameterError(name + ": weight norm exceeds declared bound");
}

double link_value(const std::string& link, double t) {
  if (link == "tanh") return std::tanh(t);
  if (link == "sin") return std::sin(t);
  if (link == "abs") return std::abs(t);
  if (link == "relu") return relu(t);
  if (link == "identity") return t;
  if (link == "softplus") return t > 30 ? t : std::log1p(std::exp(t));
  throw ParameterError("unknown link '" + link + "'");
}

double link_derivative(const std::string& link, double t) {
  if (link == "tanh") {
    const double c = std::tanh(t);
    return 1 - c * c;
  }
  if (link == "sin") return std::cos(t);
  if (link == "abs") return t >= 0 ? 1.0 : -1.0;
  if (link == "relu") return t >= 0 ? 1.0 : 0.0;
  if (link == "identity") return 1.0;
  if (link == "softplus") return 1 / (1 + std::exp(-t));
  throw ParameterError("unknown link '" + link + "'");
}

double eval_target(const TargetSpec& t, const Eigen::Ref<const Vector>& x) {
  switch (t.variant) {
    case TargetVariant::relu:
      return relu(unit_pre(t, 0, x));
    case TargetVariant::ltf:
      return sign_of(unit_pre(t, 0, x));
    case TargetVariant::lipschitz_sim:
      return link_value(t.link, unit_pre(t, 0, x));
    case TargetVariant::sum_relus: {
      double acc = 0;
      for (Index i = 0; i < t.weights.rows(); ++i) acc += relu(unit_pre(t, i, x));
      return acc;
    }
    case TargetVariant::linear_comb_relus: {
      double acc = 0;
      for (Index i = 0; i < t.weights.rows(); ++i) acc += t.output_weights(i) * relu(unit_pre(t, i, x));
      return acc;
    }
    case TargetVariant::deep_relu_net:
      return deep_forward(t, x, nullptr)(0);
    case TargetVariant::intersection_halfspaces:
      for (Index i = 0; i < t.weights.rows(); ++i)
        if (unit_pre(t, i, x) < 0) return -1.0;
      return 1.0;
    case TargetVariant::function_of_halfspaces: {
      std::size_t mask = 0;
      for (Index i = 0; i < t.weights.rows(); ++i)
        if (unit_pre(t, i, x) >= 0) mask |= std::size_t{1} << i;
      return t.truth_table[mask];
    }
    case TargetVariant::lowdim_ptf:
      return sign_of(ptf_value(t, x));
  }
  throw ParameterError("eval_target: unknown variant");
}

// Right derivative of ReLU at 0.
Vector target_gradient(const TargetSpec& t, const Eigen::Ref<const Vector>& x) {
  const Index d = t.ambient_dim();
  Vector g = Vector::Zero(d);
  switch (t.variant) {
    case TargetVariant::relu:
    case TargetVariant::sum_relus:
      for (Index i = 0; i < t.weights.rows(); ++i)
        if (unit_pre(t, i, x) >= 0) g += t.weights.row(i).transpose();
      return g;
    case TargetVariant::linear_comb_relus:
      for (Index i = 0; i < t.weights.rows(); ++i)
        if (unit_pre(t, i, x) >= 0) g += t.output_weights(i) * t.weights.row(i).transpose();
      return g;
    case TargetVariant::lipschitz_sim:
      return link_derivative(t.link, unit_pre(t, 0, x)) * t.weights.row(0).transpose();
    case TargetVariant::deep_relu_net: {
      std::vector<Vector> pre;
      deep_forward(t, x, &pre);
      Vector back = t.layers.back().row(0).transpose();
      for (std::size_t l = t.layers.size() - 1; l-- > 0;) {
        back = back.cwiseProduct((pre[l].array() >= 0).cast<double>().matrix());
        back = t.layers[l].transpose() * back;
      }
      return back;
    }
    default:
      throw ParameterError("target_gradient: " + to_string(t.variant) + " is not differentiable");
  }
}

ClassParameters class_parameters(const TargetSpec& t) {
  t.validate();
  ClassParameters p;
  p.mode = t.mode();
  const double inv_sqrt_2pi = 1 / std::sqrt(2 * std::numbers::pi);
  switch (t.variant) {
    case TargetVariant::relu: {
      const double m0 = t.norm_bound.value_or(t.weights.row(0).norm());
      p.M = std::sqrt(3.0) * m0 * m0;
      p.L = m0 * m0;
      p.k = 1;
      break;
    }
    case TargetVariant::lipschitz_sim: {
      const double m0 = t.norm_bound.value_or(t.weights.row(0).norm());
      p.M = m0 * m0;
      p.L = 1;
      p.k = 1;
      break;
    }
    case TargetVariant::sum_relus:
    case TargetVariant::linear_comb_relus: {
      double m0 = 0;
      for (Index i = 0; i < t.weights.rows(); ++i) {
        const double a = t.variant == TargetVariant::linear_comb_relus ? std::abs(t.output_weights(i)) : 1.0;
        m0 = std::max(m0, a * t.norm_bound.value_or(t.weights.row(i).norm()));
      }
      const double units = static_cast<double>(t.weights.rows());
      p.M = units * m0 * m0;
      p.L = units * m0 * m0;
      p.k = matrix_rank(t.weights);
      break;
    }
    case TargetVariant::deep_relu_net: {
      double m = 0;
      Index s = 0;
      for (std::size_t l = 0; l < t.layers.size(); ++l) {
        m = std::max(m, t.norm_bound.value_or(operator_norm(t.layers[l])));
        if (l + 1 < t.layers.size()) s = std::max(s, t.layers[l].rows());
      }
      if (t.width_bound) s = *t.width_bound;
      p.k = matrix_rank(t.layers.front());
      const double base = static_cast<double>(p.k) * m * static_cast<double>(s);
      p.M = p.L = std::pow(base, static_cast<double>(t.layers.size()));
      break;
    }
    case TargetVariant::ltf:
      p.gamma = inv_sqrt_2pi;
      p.k = 1;
      break;
    case TargetVariant::intersection_halfspaces: {
      const double units = static_cast<double>(t.weights.rows());
      p.gamma = units >= 2 ? std::sqrt(std::log(units)) : inv_sqrt_2pi;
      p.k = matrix_rank(t.weights);
      break;
    }
    case TargetVariant::function_of_halfspaces:
      p.gamma = static_cast<double>(t.weights.rows()) * inv_sqrt_2pi;
      p.k = matrix_rank(t.weights);
      break;
    case TargetVariant::lowdim_ptf: {
      int degree = 0;
      for (const PtfTerm& term : t.polynomial) {
        int d = 0;
        for (int e : term.exponents) d += e;
        if (term.coefficient != 0) degree = std::max(degree, d);
      }
      p.gamma = std::max(degree, 1);
      p.k = matrix_rank(t.weights);
      break;
    }
  }
  return p;
}

Subspace relevant_subspace(const TargetSpec& t) {
  const Matrix& w = t.variant == TargetVariant::deep_relu_net ? t.layers.front() : t.weights;
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinV);
  Index r = 0;
  const double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  while (r < svd.singularValues().size() && svd.singularValues()(r) > 1e-10 * std::max(top, 1.0)) ++r;
  return Subspace(Matrix(svd.matrixV().leftCols(r)));
}

TargetSpec make_relu(const Vector& w, double threshold) {
  TargetSpec t;
  t.variant = TargetVariant::relu;
  t.weights = w.transpose();
  t.thresholds = Vector::Constant(1, threshold);
  return t;
}

TargetSpec make_ltf(const Vector& w, double threshold) {
  TargetSpec t = make_relu(w, threshold);
  t.variant = TargetVariant::ltf;
  return t;
}

TargetSpec make_sum_relus(const Matrix& w, const Vector& thresholds) {
  TargetSpec t;
  t.variant = TargetVariant::sum_relus;
  t.weights = w;
  t.thresholds = thresholds.size() ? thresholds : Vector::Zero(w.rows());
  return t;
}

TargetSpec make_intersection(const Matrix& w, const Vector& thresholds) {
  TargetSpec t = make_sum_relus(w, thresholds);
  t.variant = TargetVariant::intersection_halfspaces;
  return t;
}

void CorruptionSpec::validate(Index ambient_dim, LabelMode mode) const {
  const std::string name = to_string(kind);
  auto need_region = [&] {
    if (direction.size() != ambient_dim) throw DimensionError(name + ": region direction has wrong dimension");
  };
  switch (kind) {
    case CorruptionKind::none:
      return;
    case CorruptionKind::region_flip:
      if (mode != LabelMode::boolean) throw ParameterError(name + ": requires Boolean labels");
      need_region();
      return;
    case CorruptionKind::hash_flip:
      if (mode != LabelMode::boolean) throw ParameterError(name + ": requires Boolean labels");
      if (!(rate >= 0 && rate <= 1)) throw ParameterError(name + ": rate must lie in [0, 1]");
      if (!(cell_size > 0)) throw ParameterError(name + ": cell size must be positive");
      return;
    case CorruptionKind::additive_bounded:
      if (mode != LabelMode::real) throw ParameterError(name + ": requires real labels");
      if (!(bound >= 0)) throw ParameterError(name + ": bound must be non-negative");
      if (shape == AdditiveShape::halfspace) need_region();
      if (!(cell_size > 0)) throw ParameterError(name + ": cell size must be positive");
      return;
    case CorruptionKind::replace_region:
      if (mode != LabelMode::real) throw ParameterError(name + ": requires real labels");
      need_region();
      return;
  }
}

std::uint64_t cell_hash(const Eigen::Ref<const Vector>& x, double cell_size, std::uint64_t seed) {
  std::uint64_t h = mix64(seed);
  for (Index i = 0; i < x.size(); ++i) {
    const auto c = static_cast<std::int64_t>(std::floor(x(i) / cell_size));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(c));
  }
  return h;
}

double apply_corruption(const CorruptionSpec& c, double clean, const Eigen::Ref<const Vector>& x) {
  switch (c.kind) {
    case CorruptionKind::none:
      return clean;
    case CorruptionKind::region_flip:
      return c.direction.dot(x) >= c.threshold ? -clean : clean;
    case CorruptionKind::hash_flip: {
      const double u = static_cast<double>(cell_hash(x, c.cell_size, c.seed) >> 11) * 0x1.0p-53;
      return u < c.rate ? -clean : clean;
    }
    case CorruptionKind::additive_bounded:
      if (c.shape == AdditiveShape::halfspace) return clean + c.bound * sign_of(c.direction.dot(x) - c.threshold);
      return clean + ((cell_hash(x, c.cell_size, c.seed) >> 63) ? c.bound : -c.bound);
    case CorruptionKind::replace_region:
      return c.direction.dot(x) >= c.threshold ? c.value : clean;
  }
  return clean;
}

void BudgetLedger::charge_query() {
  std::uint64_t used = queries_.load(std::memory_order_relaxed);
  do {
    if (used >= query_cap_)
      throw BudgetError("query", stage_,
                        "query budget of " + std::to_string(query_cap_) + " exhausted" +
                            (stage_.empty() ? std::string() : " during " + stage_));
  } while (!queries_.compare_exchange_weak(used, used + 1, std::memory_order_relaxed));
}

void BudgetLedger::charge_sample() {
  std::uint64_t used = samples_.load(std::memory_order_relaxed);
  do {
    if (used >= sample_cap_)
      throw BudgetError("sample", stage_,
                        "sample budget of " + std::to_string(sample_cap_) + " exhausted" +
                            (stage_.empty() ? std::string() : " during " + stage_));
  } while (!samples_.compare_exchange_weak(used, used + 1, std::memory_order_relaxed));
}

LabelOracle::LabelOracle(TargetSpec target, CorruptionSpec corruption, std::shared_ptr<BudgetLedger> ledger) {
  target.validate();
  dim_ = target.ambient_dim();
  mode_ = target.mode();
  corruption.validate(dim_, mode_);
  target_ = std::make_shared<const TargetSpec>(std::move(target));
  corruption_ = std::make_shared<const CorruptionSpec>(std::move(corruption));
  ledger_ = ensure(std::move(ledger));
}

LabelOracle::LabelOracle(LabelFunction label, Index ambient_dim, LabelMode mode,
                         std::shared_ptr<BudgetLedger> ledger)
    : corruption_(std::make_shared<const CorruptionSpec>()),
      custom_(std::move(label)),
      dim_(ambient_dim),
      mode_(mode),
      ledger_(ensure(std::move(ledger))) {
  if (!custom_) throw ParameterError("LabelOracle: empty label function");
  if (ambient_dim <= 0) throw DimensionError("LabelOracle: ambient dimension must be positive");
}

void LabelOracle::check_point(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim_)
    throw DimensionError("oracle: point dimension " + std::to_string(x.size()) + " does not match " +
                         std::to_string(dim_));
}

const TargetSpec& LabelOracle::target() const {
  if (!target_) throw ParameterError("oracle: no white-box target attached");
  return *target_;
}

double LabelOracle::clean_label(const Eigen::Ref<const Vector>& x) const {
  check_point(x);
  if (custom_) return custom_(x);
  return eval_target(*target_, x);
}

double LabelOracle::label(const Eigen::Ref<const Vector>& x) const {
  check_point(x);
  double y = custom_ ? custom_(x) : apply_corruption(*corruption_, eval_target(*target_, x), x);
  if (truncation_) y = std::copysign(std::min(std::abs(y), *truncation_), y);
  return y;
}

double LabelOracle::query(const Eigen::Ref<const Vector>& x) {
  check_point(x);
  ledger_->charge_query();
  return label(x);
}

LabeledPoint LabelOracle::draw_sample(RandomStream& rng) {
  ledger_->charge_sample();
  LabeledPoint p{sample_standard_normal(dim_, rng), 0.0};
  p.y = label(p.x);
  return p;
}

void LabelOracle::draw_samples(Index n, RandomStream& rng, Matrix& points, Vector& labels) {
  points.resize(n, dim_);
  labels.resize(n);
  Vector x(dim_);
  for (Index i = 0; i < n; ++i) {
    ledger_->charge_sample();
    rng.fill_normal(x);
    points.row(i) = x.transpose();
    labels(i) = label(x);
  }
}

LabelOracle LabelOracle::truncated(double bound) const {
  if (!(bound > 0)) throw ParameterError("truncated: bound must be positive");
  LabelOracle view = *this;
  view.truncation_ = truncation_ ? std::min(*truncation_, bound) : bound;
  return view;
}

double loss_value(LossMode mode, double prediction, double label) {
  switch (mode) {
    case LossMode::l22:
      return (prediction - label) * (prediction - label);
    case LossMode::zero_one:
      return sign_of(prediction) != sign_of(label) ? 1.0 : 0.0;
    case LossMode::l1:
      return std::abs(prediction - label);
  }
  return 0;
}

double opt_error(const LabelOracle& oracle, LossMode mode, const Matrix& points) {
  if (points.cols() != oracle.ambient_dim()) throw DimensionError("opt_error: point dimension mismatch");
  double acc = 0;
  for (Index i = 0; i < points.rows(); ++i) {
    const Vector x = points.row(i).transpose();
    acc += loss_value(mode, oracle.clean_label(x), oracle.label(x));
  }
  return points.rows() ? acc / static_cast<double>(points.rows()) : 0.0;
}

double opt_error(const LabelOracle& oracle, LossMode mode, Index n, RandomStream& rng) {
  if (n <= 0) throw ParameterError("opt_error: sample count must be positive");
  return opt_error(oracle, mode, sample_standard_normal_rows(n, oracle.ambient_dim(), rng));
}

std::string to_string(TargetVariant v) {
  switch (v) {
    case TargetVariant::relu: return "relu";
    case TargetVariant::ltf: return "ltf";
    case TargetVariant::lipschitz_sim: return "lipschitz_sim";
    case TargetVariant::sum_relus: return "sum_relus";
    case TargetVariant::linear_comb_relus: return "linear_comb_relus";
    case TargetVariant::deep_relu_net: return "deep_relu_net";
    case TargetVariant::intersection_halfspaces: return "intersection_halfspaces";
    case TargetVariant::function_of_halfspaces: return "function_of_halfspaces";
    case TargetVariant::lowdim_ptf: return "lowdim_ptf";
  }
  return "unknown";
}

std::string to_string(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::none: return "none";
    case CorruptionKind::region_flip: return "region_flip";
    case CorruptionKind::hash_flip: return "hash_flip";
    case CorruptionKind::additive_bounded: return "additive_bounded";
    case CorruptionKind::replace_region: return "replace_region";
  }
  return "unknown";
}

std::string to_string(LabelMode m) { return m == LabelMode::real ? "real" : "boolean"; }

std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::l22: return "l22";
    case LossMode::zero_one: return "zero_one";
    case LossMode::l1: return "l1";
  }
  return "unknown";
}

TargetVariant parse_target_variant(const std::string& s) {
  for (auto v : {TargetVariant::relu, TargetVariant::ltf, TargetVariant::lipschitz_sim, TargetVariant::sum_relus,
                 TargetVariant::linear_comb_relus, TargetVariant::deep_relu_net,
                 TargetVariant::intersection_halfspaces, TargetVariant::function_of_halfspaces,
                 TargetVariant::lowdim_ptf})
    if (to_string(v) == s) return v;
  throw ConfigError("variant", "unknown target variant '" + s + "'");
}

CorruptionKind parse_corruption_kind(const std::string& s) {
  for (auto k : {CorruptionKind::none, CorruptionKind::region_flip, CorruptionKind::hash_flip,
                 CorruptionKind::additive_bounded, CorruptionKind::replace_region})
    if (to_string(k) == s) return k;
  throw ConfigError("kind", "unknown corruption kind '" + s + "'");
}

LossMode parse_loss_mode(const std::string& s) {
  for (auto m : {LossMode::l22, LossMode::zero_one, LossMode::l1})
    if (to_string(m) == s) return m;
  throw ConfigError("loss", "unknown loss '" + s + "'");
}

void to_json(nlohmann::json& j, const TargetSpec& t) {
  j = nlohmann::json::object();
  j["variant"] = to_string(t.variant);
  if (t.variant == TargetVariant::deep_relu_net) {
    j["layers"] = nlohmann::json::array();
    for (const Matrix& w : t.layers) j["layers"].push_back(matrix_to_json(w));
  } else {
    j["weights"] = matrix_to_json(t.weights);
  }
  if (t.thresholds.size()) j["thresholds"] = vector_to_json(t.thresholds);
  if (t.output_weights.size()) j["output_weights"] = vector_to_json(t.output_weights);
  if (t.variant == TargetVariant::lipschitz_sim) j["link"] = t.link;
  if (!t.truth_table.empty()) j["truth_table"] = t.truth_table;
  if (!t.polynomial.empty()) {
    j["polynomial"] = nlohmann::json::array();
    for (const PtfTerm& term : t.polynomial) j["polynomial"].push_back({term.exponents, term.coefficient});
  }
  if (t.norm_bound) j["norm_bound"] = *t.norm_bound;
  if (t.width_bound) j["width_bound"] = *t.width_bound;
}

void from_json(const nlohmann::json& j, TargetSpec& t) {
  JsonReader r(j, "target");
  t = TargetSpec{};
  t.variant = parse_target_variant(r.required<std::string>("variant"));
  if (t.variant == TargetVariant::deep_relu_net) {
    const auto& layers = r.child("layers");
    if (!layers.is_array()) throw ConfigError(r.path("layers"), "expected an array of matrices");
    for (std::size_t l = 0; l < layers.size(); ++l)
      t.layers.push_back(matrix_from_json(layers[l], r.path("layers") + "/" + std::to_string(l)));
  } else {
    t.weights = matrix_from_json(r.child("weights"), r.path("weights"));
  }
  if (r.has("thresholds")) t.thresholds = vector_from_json(r.child("thresholds"), r.path("thresholds"));
  if (r.has("output_weights"))
    t.output_weights = vector_from_json(r.child("output_weights"), r.path("output_weights"));
  t.link = r.optional<std::string>("link", t.link);
  if (r.has("truth_table")) t.truth_table = r.required<std::vector<int>>("truth_table");
  if (r.has("polynomial")) {
    for (const auto& term : r.child("polynomial")) {
      if (!term.is_array() || term.size() != 2) throw ConfigError(r.path("polynomial"), "terms are [exponents, coef]");
      t.polynomial.push_back({term[0].get<std::vector<int>>(), term[1].get<double>()});
    }
  }
  if (r.has("norm_bound")) t.norm_bound = r.required<double>("norm_bound");
  if (r.has("width_bound")) t.width_bound = r.required<Index>("width_bound");
  try {
    t.validate();
  } catch (const std::exception& e) {
    throw ConfigError("target", e.what());
  }
}

void to_json(nlohmann::json& j, const CorruptionSpec& c) {
  j = nlohmann::json::object();
  j["kind"] = to_string(c.kind);
  switch (c.kind) {
    case CorruptionKind::none:
      break;
    case CorruptionKind::hash_flip:
      j["rate"] = c.rate;
      j["seed"] = c.seed;
      j["cell_size"] = c.cell_size;
      break;
    case CorruptionKind::additive_bounded:
      j["bound"] = c.bound;
      j["shape"] = c.shape == AdditiveShape::hash ? "hash" : "halfspace";
      if (c.shape == AdditiveShape::hash) {
        j["seed"] = c.seed;
        j["cell_size"] = c.cell_size;
      } else {
        j["direction"] = vector_to_json(c.direction);
        j["threshold"] = c.threshold;
      }
      break;
    case CorruptionKind::region_flip:
    case CorruptionKind::replace_region:
      j["direction"] = vector_to_json(c.direction);
      j["threshold"] = c.threshold;
      if (c.kind == CorruptionKind::replace_region) j["value"] = c.value;
      break;
  }
}

void from_json(const nlohmann::json& j, CorruptionSpec& c) {
  JsonReader r(j, "corruption");
  c = CorruptionSpec{};
  c.kind = parse_corruption_kind(r.required<std::string>("kind"));
  c.rate = r.optional<double>("rate", c.rate);
  c.seed = r.optional<std::uint64_t>("seed", c.seed);
  c.bound = r.optional<double>("bound", c.bound);
  c.cell_size = r.optional<double>("cell_size", c.cell_size);
  c.threshold = r.optional<double>("threshold", c.threshold);
  c.value = r.optional<double>("value", c.value);
  const std::string shape = r.optional<std::string>("shape", "hash");
  if (shape == "hash")
    c.shape = AdditiveShape::hash;
  else if (shape == "halfspace")
    c.shape = AdditiveShape::halfspace;
  else
    throw ConfigError(r.path("shape"), "expected 'hash' or 'halfspace'");
  if (r.has("direction")) c.direction = vector_from_json(r.child("direction"), r.path("direction"));
}

}  // namespace mimq
