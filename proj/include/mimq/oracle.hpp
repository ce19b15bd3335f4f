#pragma once

#include "mimq/gaussian.hpp"
#include "mimq/random.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mimq {

enum class LabelMode { real, boolean };
enum class LossMode { l22, zero_one, l1 };

enum class TargetVariant {
  relu,
  ltf,
  lipschitz_sim,
  sum_relus,
  linear_comb_relus,
  deep_relu_net,
  intersection_halfspaces,
  function_of_halfspaces,
  lowdim_ptf
};

struct PtfTerm {
  std::vector<int> exponents;
  double coefficient = 0;
};

// Units are rows of `weights`; unit i computes w_i . x - thresholds_i.
struct TargetSpec {
  TargetVariant variant = TargetVariant::relu;
  Matrix weights;
  Vector thresholds;
  Vector output_weights;       // linear_comb_relus
  std::vector<Matrix> layers;  // deep_relu_net, input layer first, last layer has one row
  std::string link = "tanh";   // lipschitz_sim
  std::vector<int> truth_table;  // function_of_halfspaces, entry at bitmask of positive halfspaces
  std::vector<PtfTerm> polynomial;  // lowdim_ptf, monomials in the unit outputs
  std::optional<double> norm_bound;
  std::optional<Index> width_bound;

  Index ambient_dim() const;
  Index unit_count() const;
  LabelMode mode() const;
  void validate() const;
};

struct ClassParameters {
  double M = 0;
  double L = 0;
  double gamma = 0;
  Index k = 0;
  LabelMode mode = LabelMode::real;
};

double eval_target(const TargetSpec& target, const Eigen::Ref<const Vector>& x);
Vector target_gradient(const TargetSpec& target, const Eigen::Ref<const Vector>& x);
ClassParameters class_parameters(const TargetSpec& target);
Subspace relevant_subspace(const TargetSpec& target);
double link_value(const std::string& link, double t);
double link_derivative(const std::string& link, double t);

TargetSpec make_relu(const Vector& w, double threshold = 0);
TargetSpec make_ltf(const Vector& w, double threshold = 0);
TargetSpec make_sum_relus(const Matrix& w, const Vector& thresholds = Vector());
TargetSpec make_intersection(const Matrix& w, const Vector& thresholds = Vector());

enum class CorruptionKind { none, region_flip, hash_flip, additive_bounded, replace_region };
enum class AdditiveShape { hash, halfspace };

// Regions are {x : direction . x >= threshold}. Hash cells are axis-aligned cubes of side cell_size.
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::none;
  double rate = 0;
  std::uint64_t seed = 0;
  double bound = 0;
  AdditiveShape shape = AdditiveShape::hash;
  Vector direction;
  double threshold = 0;
  double value = 0;
  double cell_size = 1e-3;

  void validate(Index ambient_dim, LabelMode mode) const;
};

std::uint64_t cell_hash(const Eigen::Ref<const Vector>& x, double cell_size, std::uint64_t seed);
double apply_corruption(const CorruptionSpec& corruption, double clean, const Eigen::Ref<const Vector>& x);

class BudgetLedger {
 public:
  static constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();

  explicit BudgetLedger(std::uint64_t query_cap = kUnlimited, std::uint64_t sample_cap = kUnlimited)
      : query_cap_(query_cap), sample_cap_(sample_cap) {}

  void charge_query();
  void charge_sample();

  std::uint64_t queries_used() const noexcept { return queries_.load(std::memory_order_relaxed); }
  std::uint64_t samples_used() const noexcept { return samples_.load(std::memory_order_relaxed); }
  std::uint64_t query_cap() const noexcept { return query_cap_; }
  std::uint64_t sample_cap() const noexcept { return sample_cap_; }

  void set_stage(std::string stage) { stage_ = std::move(stage); }
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::uint64_t query_cap_;
  std::uint64_t sample_cap_;
  std::atomic<std::uint64_t> queries_{0};
  std::atomic<std::uint64_t> samples_{0};
  std::string stage_;
};

using LabelFunction = std::function<double(const Eigen::Ref<const Vector>&)>;

struct LabeledPoint {
  Vector x;
  double y = 0;
};

class LabelOracle {
 public:
  LabelOracle(TargetSpec target, CorruptionSpec corruption, std::shared_ptr<BudgetLedger> ledger = nullptr);
  LabelOracle(LabelFunction label, Index ambient_dim, LabelMode mode, std::shared_ptr<BudgetLedger> ledger = nullptr);

  double query(const Eigen::Ref<const Vector>& x);
  LabeledPoint draw_sample(RandomStream& rng);
  void draw_samples(Index n, RandomStream& rng, Matrix& points, Vector& labels);

  // budget-exempt evaluation for the harness
  double label(const Eigen::Ref<const Vector>& x) const;
  double clean_label(const Eigen::Ref<const Vector>& x) const;

  // view sharing this oracle's ledger whose labels are sign(y) min(|y|, bound)
  LabelOracle truncated(double bound) const;

  Index ambient_dim() const noexcept { return dim_; }
  LabelMode mode() const noexcept { return mode_; }
  bool has_target() const noexcept { return target_ != nullptr; }
  const TargetSpec& target() const;
  const CorruptionSpec& corruption() const noexcept { return *corruption_; }
  std::optional<double> truncation() const noexcept { return truncation_; }
  BudgetLedger& ledger() noexcept { return *ledger_; }
  const BudgetLedger& ledger() const noexcept { return *ledger_; }
  std::shared_ptr<BudgetLedger> shared_ledger() const noexcept { return ledger_; }

 private:
  LabelOracle() = default;
  void check_point(const Eigen::Ref<const Vector>& x) const;

  std::shared_ptr<const TargetSpec> target_;
  std::shared_ptr<const CorruptionSpec> corruption_;
  LabelFunction custom_;
  Index dim_ = 0;
  LabelMode mode_ = LabelMode::real;
  std::optional<double> truncation_;
  std::shared_ptr<BudgetLedger> ledger_;
};

inline double query(LabelOracle& oracle, const Eigen::Ref<const Vector>& x) { return oracle.query(x); }
inline LabeledPoint draw_sample(LabelOracle& oracle, RandomStream& rng) { return oracle.draw_sample(rng); }

// Monte Carlo estimate of the clean target's error against the oracle's labels. Budget-exempt.
double opt_error(const LabelOracle& oracle, LossMode mode, Index n, RandomStream& rng);
double opt_error(const LabelOracle& oracle, LossMode mode, const Matrix& points);

double loss_value(LossMode mode, double prediction, double label);

std::string to_string(TargetVariant v);
std::string to_string(CorruptionKind k);
std::string to_string(LabelMode m);
std::string to_string(LossMode m);
TargetVariant parse_target_variant(const std::string& s);
CorruptionKind parse_corruption_kind(const std::string& s);
LossMode parse_loss_mode(const std::string& s);

void to_json(nlohmann::json& j, const TargetSpec& t);
void from_json(const nlohmann::json& j, TargetSpec& t);
void to_json(nlohmann::json& j, const CorruptionSpec& c);
void from_json(const nlohmann::json& j, CorruptionSpec& c);

}  // namespace mimq
