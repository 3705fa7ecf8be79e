#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyhappy/chemfeat.hpp"
#include "polyhappy/forge.hpp"
#include "polyhappy/metrics.hpp"
#include "polyhappy/molgraph.hpp"

namespace polyhappy {

class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Property oracle

struct RidgeSolution {
  std::vector<double> weights;
  double bias = 0.0;
};

// Ridge regression with an unpenalized intercept (columns are centered).
// Throws DesignError when the system is singular.
RidgeSolution fit_ridge(std::span<const std::vector<double>> x, std::span<const double> y, double lambda);

struct PropertyOracle {
  std::string property_name;
  std::vector<int> selected;  // descriptor indices
  std::vector<double> weights;
  double bias = 0.0;
  ScalerParams scaler;  // over the full descriptor schema

  double predict(const DescriptorVector& d) const;
  double predict(const MolGraph& g) const;
  // d(predict)/d(descriptor) for every schema entry.
  DescriptorVector gradient() const;
};

double predict_property(const PropertyOracle& oracle, const MolGraph& g);

double r2_score(std::span<const double> predictions, std::span<const double> truths);

struct OracleFit {
  PropertyOracle oracle;
  double train_r2 = 0.0;
  std::optional<double> validation_r2;
};

struct LabeledSet {
  std::vector<DescriptorVector> descriptors;
  std::vector<double> values;

  static LabeledSet from_graphs(std::span<const MolGraph> graphs, std::span<const double> values);
  std::size_t size() const { return values.size(); }
};

OracleFit train_oracle(const LabeledSet& train, int k, double lambda, const std::string& property_name,
                       const LabeledSet* validation = nullptr);

nlohmann::json oracle_to_json(const PropertyOracle& o);
PropertyOracle oracle_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Policy

// Tabular softmax policy over the next token given the previous k tokens.
// Output index 0 is end-of-sequence; the start marker only appears in
// contexts (as kBos) and is never emitted.
class Policy {
 public:
  static constexpr int kBos = -1;
  static constexpr int kEos = 0;
  static constexpr const char* kEosToken = "<eos>";

  using Context = std::vector<int>;

  Policy() = default;
  Policy(std::vector<std::string> tokens, int k);

  // Logits log(count + smoothing) from observed sequences; the token list is
  // the sorted set of observed tokens.
  static Policy fit(std::span<const std::vector<std::string>> sequences, int k, double smoothing = 1e-3);

  int context_length() const { return k_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int size() const { return static_cast<int>(tokens_.size()); }
  std::optional<int> index_of(const std::string& token) const;
  const std::map<Context, std::vector<double>>& table() const { return logits_; }

  // Context preceding position pos of seq, padded with kBos.
  Context context_at(std::span<const int> seq, std::size_t pos) const;

  std::vector<double> logits(const Context& ctx) const;
  std::vector<double> distribution(const Context& ctx) const;
  void set_logits(const Context& ctx, std::vector<double> values);
  void add_to_logits(const Context& ctx, std::span<const double> delta);

  std::vector<int> encode_tokens(std::span<const std::string> seq) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int k_ = 3;
  std::map<Context, std::vector<double>> logits_;
};

nlohmann::json policy_to_json(const Policy& p);
Policy policy_from_json(const nlohmann::json& j);

// Sum of log-probabilities of every token, including the closing EOS.
double sequence_log_prob(const Policy& p, std::span<const std::string> tokens);
// Index form: seq holds emitted indices, a trailing kEos included if present.
double sequence_log_prob(const Policy& p, std::span<const int> seq);

struct PolicySample {
  std::vector<int> indices;  // emitted tokens, trailing kEos if terminated
  bool terminated = false;
  std::vector<double> step_entropies;
};

// Deterministic in (seed, stream, sample index).
std::vector<PolicySample> sample_sequences(const Policy& p, int n, int max_len, std::uint64_t seed,
                                           std::uint64_t stream = 0);

// Turns token sequences into strings and decodes them, caching by string.
class SampleDecoder {
 public:
  SampleDecoder(SampleFormat format, const Vocabulary* vocab) : format_(format), vocab_(vocab) {}

  std::string render(const Policy& p, const PolicySample& s) const;
  const DecodedSample& decode(const std::string& text);
  SampleFormat format() const { return format_; }
  const Vocabulary* vocabulary() const { return vocab_; }

 private:
  SampleFormat format_;
  const Vocabulary* vocab_;
  std::unordered_map<std::string, DecodedSample> cache_;
};

struct SampledBatch {
  std::vector<PolicySample> sequences;
  GenerationBatch batch;
};

// Unterminated samples (max_len reached) count as invalid.
SampledBatch sample_batch(const Policy& p, int n, int max_len, std::uint64_t seed, SampleDecoder& decoder,
                          std::uint64_t stream = 0);

// Per-context gradient of sum_i A_i log p(seq_i), A_i = reward_i - mean.
std::map<Policy::Context, std::vector<double>> policy_gradient(const Policy& p,
                                                               std::span<const PolicySample> samples,
                                                               std::span<const double> rewards);

Policy reinforce_update(const Policy& p, std::span<const PolicySample> samples, std::span<const double> rewards,
                        double learning_rate);

// ---------------------------------------------------------------------------
// Rewards

enum class TargetMode { kMatch, kGreaterThan, kLessThan };

struct PropertyTarget {
  PropertyOracle oracle;
  TargetMode mode = TargetMode::kMatch;
  double value = 0.0;  // target for match, threshold otherwise
  double weight = 1.0;
};

struct RewardConfig {
  std::vector<PropertyTarget> properties;
  double diversity_target = 0.6;    // greater_than
  double similarity_target = 0.7;   // match
  double specificity_target = 1.0;  // match
  double sa_threshold = 4.5;        // less_than
  double diversity_weight = 1.0;
  double similarity_weight = 1.0;
  double specificity_weight = 1.0;
  double sa_weight = 1.0;
  double scaffold_weight = 1.0;
  std::optional<std::string> scaffold;  // vocabulary token
  int batch_size = 512;
  int max_len = 64;
  double learning_rate = 0.05;

  void validate() const;
};

RewardConfig reward_config_from_json(const nlohmann::json& j);
nlohmann::json reward_config_to_json(const RewardConfig& c);

// Raw term for a single value under a target mode.
double target_term(TargetMode mode, double value, double target);

struct RewardBreakdown {
  bool valid = false;
  std::vector<double> raw;     // per term, in RewardResult::terms order
  std::vector<double> scaled;  // min-max over valid samples
  double reward = 0.0;
};

struct RewardResult {
  std::vector<std::string> terms;
  std::vector<double> weights;
  std::vector<RewardBreakdown> samples;
  std::vector<double> rewards;
};

struct RewardContext {
  const TrainingSet* train = nullptr;
  const SaModel* sa = nullptr;
  const Vocabulary* vocab = nullptr;
};

// Terms with zero weight are skipped entirely.
RewardResult compute_rewards(const GenerationBatch& batch, const RewardConfig& config, const RewardContext& ctx);

// ---------------------------------------------------------------------------
// Training loop

struct TrajectoryStep {
  int step = 0;
  double mean_reward = 0.0;
  MetricsReport metrics;
};

nlohmann::json to_json(const TrajectoryStep& s);

struct RlResult {
  Policy policy;
  std::vector<TrajectoryStep> trajectory;
};

RlResult rl_train(const Policy& initial, const RewardConfig& config, int steps, std::uint64_t seed,
                  const RewardContext& ctx, SampleDecoder& decoder,
                  const std::function<void(const TrajectoryStep&)>& on_step = {});

}  // namespace polyhappy
