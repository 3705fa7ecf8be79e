#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyhappy/chemfeat.hpp"
#include "polyhappy/forge.hpp"
#include "polyhappy/fragment.hpp"
#include "polyhappy/molgraph.hpp"

namespace polyhappy {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SampleFormat { kHappy, kSmiles };

// One decoded string. graph is present only for valid samples.
struct DecodedSample {
  std::optional<MolGraph> graph;
  std::optional<FingerprintBits> fingerprint;
  std::string canonical;
  std::vector<std::string> tokens;  // vocabulary names, annotations stripped
};

DecodedSample decode_sample(const std::string& text, SampleFormat format, const Vocabulary* vocab);

struct GenerationBatch {
  std::vector<std::string> samples;
  std::vector<std::optional<MolGraph>> decoded;
  std::vector<std::optional<FingerprintBits>> fingerprints;
  std::vector<std::string> canonical;
  std::vector<std::vector<std::string>> tokens;
  // Entropy (nats) of the next-token distribution at each decoding step.
  std::vector<std::vector<double>> step_entropies;

  std::size_t size() const { return samples.size(); }
  bool valid(std::size_t i) const { return decoded[i].has_value(); }
  std::size_t valid_count() const;
  void push_back(std::string sample, DecodedSample d);
};

// Decodes every string; vocab is required for HAPPY and optional for SMILES
// (used to tile samples for token-mode scaffold checks).
GenerationBatch make_batch(std::span<const std::string> samples, SampleFormat format,
                           const Vocabulary* vocab);

struct TrainingSet {
  std::unordered_set<std::string> canonical;
  std::vector<FingerprintBits> fingerprints;

  static TrainingSet from_graphs(std::span<const MolGraph> graphs);
  std::size_t size() const { return fingerprints.size(); }
};

struct NearestNeighbor {
  int index = -1;
  double similarity = 0.0;
};

// Highest Tanimoto over the training set; ties resolve to the lowest index.
NearestNeighbor nearest_train_neighbor(const FingerprintBits& fp, const TrainingSet& train);
double nearest_train_similarity(const FingerprintBits& fp, const TrainingSet& train);

double validity_fraction(const GenerationBatch& batch);
double novelty_fraction(const GenerationBatch& batch, const TrainingSet& train);
double mean_similarity(const GenerationBatch& batch, const TrainingSet& train);

// Per valid sample, mean (1 - sim) over its min(10, n-1) most similar valid
// peers. Returned in batch order; invalid samples are absent.
std::vector<double> diversity_contributions(const GenerationBatch& batch);
double internal_diversity(const GenerationBatch& batch);

// Per valid sample: 1 - (valid samples sharing its nearest neighbor) / N,
// with N the full batch size.
std::vector<double> specificity_contributions(const GenerationBatch& batch, const TrainingSet& train);
double specificity(const GenerationBatch& batch, const TrainingSet& train);

// Entropy in nats. Throws MetricError if p does not sum to 1 within 1e-9
// or has negative entries.
double shannon_entropy(std::span<const double> p);
// Mean entropy over every step of every sequence.
double policy_entropy(std::span<const std::vector<std::vector<double>>> distributions);
double mean_step_entropy(const GenerationBatch& batch);

double scaffold_fraction(const GenerationBatch& batch, const std::string& token, const Vocabulary& vocab);
double scaffold_fraction(const GenerationBatch& batch, const Fragment& scaffold);

// True if the scaffold (wildcards removed) embeds in g with matching
// element, charge, aromaticity, hydrogen count and degree; what lies beyond
// a port is not checked.
bool contains_scaffold(const MolGraph& g, const Fragment& scaffold);

// Environment-frequency table for the SA-lite score.
class SaModel {
 public:
  static constexpr int kRadius = 2;

  static SaModel fit(std::span<const MolGraph> reference);

  int frequency(std::uint64_t env) const;
  int max_frequency() const { return max_count_; }
  std::size_t size() const { return counts_.size(); }

 private:
  std::unordered_map<std::uint64_t, int> counts_;
  int max_count_ = 0;
};

struct SaComponents {
  double familiarity = 0.0;  // in [-1, 0]
  double size_penalty = 0.0;
  double fusion_penalty = 0.0;
  double macrocycle_penalty = 0.0;
  double score = 1.0;
};

SaComponents sa_components(const MolGraph& g, const SaModel& model);
double sa_score(const MolGraph& g, const SaModel& model);
double mean_sa(const GenerationBatch& batch, const SaModel& model);

struct MetricsReport {
  double validity = 0.0;
  std::optional<double> novelty;
  std::optional<double> mean_similarity;
  std::optional<double> internal_diversity;
  std::optional<double> mean_sa;
  std::optional<double> specificity;
  std::optional<double> entropy;
  std::optional<double> scaffold_fraction;
};

struct EvaluationContext {
  const TrainingSet* train = nullptr;
  const SaModel* sa = nullptr;
  const Vocabulary* vocab = nullptr;
  std::optional<std::string> scaffold_token;
};

// Metrics that are undefined for this batch are left empty.
MetricsReport evaluate_batch(const GenerationBatch& batch, const EvaluationContext& ctx);

nlohmann::json to_json(const MetricsReport& r);

}  // namespace polyhappy
