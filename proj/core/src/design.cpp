#include "polyhappy/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "polyhappy/happy.hpp"

namespace polyhappy {

// ---------------------------------------------------------------------------
// Oracle

RidgeSolution fit_ridge(std::span<const std::vector<double>> x, std::span<const double> y, double lambda) {
  if (x.size() != y.size() || x.empty()) throw DesignError("ridge needs matching, non-empty x and y");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DesignError("ridge lambda must be finite and >= 0");
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto p = static_cast<Eigen::Index>(x.front().size());
  Eigen::MatrixXd m(n, p);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = x[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != p) throw DesignError("ragged ridge input");
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    v(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::RowVectorXd mx = m.colwise().mean();
  double my = v.mean();
  RidgeSolution out;
  out.bias = my;
  if (p == 0) return out;
  Eigen::MatrixXd c = m.rowwise() - mx;
  Eigen::MatrixXd a = c.transpose() * c;
  a.diagonal().array() += lambda;
  Eigen::VectorXd rhs = c.transpose() * (v.array() - my).matrix();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw DesignError("singular ridge system (collinear features with lambda = 0?)");
  Eigen::VectorXd w = lu.solve(rhs);
  out.weights.assign(w.data(), w.data() + w.size());
  out.bias = my - mx.dot(w);
  return out;
}

double PropertyOracle::predict(const DescriptorVector& d) const {
  std::vector<double> s = apply_scaler(d, scaler);
  double v = bias;
  for (std::size_t j = 0; j < selected.size(); ++j) v += weights[j] * s[static_cast<std::size_t>(selected[j])];
  return v;
}

double PropertyOracle::predict(const MolGraph& g) const { return predict(compute_descriptors(g)); }

DescriptorVector PropertyOracle::gradient() const {
  DescriptorVector g{};
  for (std::size_t j = 0; j < selected.size(); ++j) {
    auto c = static_cast<std::size_t>(selected[j]);
    double span = scaler.max[c] - scaler.min[c];
    if (span != 0.0) g[c] += weights[j] / span;
  }
  return g;
}

double predict_property(const PropertyOracle& oracle, const MolGraph& g) { return oracle.predict(g); }

double r2_score(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size() || truths.size() < 2) throw DesignError("r2 needs equal lengths >= 2");
  double mean = std::accumulate(truths.begin(), truths.end(), 0.0) / static_cast<double>(truths.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ss_res += (truths[i] - predictions[i]) * (truths[i] - predictions[i]);
    ss_tot += (truths[i] - mean) * (truths[i] - mean);
  }
  if (ss_tot == 0.0) throw DesignError("r2 undefined for constant truths");
  return 1.0 - ss_res / ss_tot;
}

LabeledSet LabeledSet::from_graphs(std::span<const MolGraph> graphs, std::span<const double> values) {
  if (graphs.size() != values.size()) throw DesignError("graphs and values differ in length");
  LabeledSet s;
  for (const MolGraph& g : graphs) s.descriptors.push_back(compute_descriptors(g));
  s.values.assign(values.begin(), values.end());
  return s;
}

OracleFit train_oracle(const LabeledSet& train, int k, double lambda, const std::string& property_name,
                       const LabeledSet* validation) {
  if (k < 0 || static_cast<std::size_t>(k) > kDescriptorCount) throw DesignError("k outside the descriptor schema");
  if (train.size() < static_cast<std::size_t>(k) + 2) throw DesignError("train_oracle needs at least k + 2 records");
  std::vector<std::vector<double>> rows;
  for (const auto& d : train.descriptors) rows.emplace_back(d.begin(), d.end());

  OracleFit fit;
  PropertyOracle& o = fit.oracle;
  o.property_name = property_name;
  o.scaler = fit_scaler(rows);
  std::vector<std::vector<double>> scaled;
  for (const auto& r : rows) scaled.push_back(apply_scaler(r, o.scaler));
  o.selected = select_descriptors(scaled, train.values, k);

  std::vector<std::vector<double>> x;
  for (const auto& r : scaled) {
    std::vector<double> sel;
    for (int c : o.selected) sel.push_back(r[static_cast<std::size_t>(c)]);
    x.push_back(std::move(sel));
  }
  RidgeSolution sol = fit_ridge(x, train.values, lambda);
  o.weights = sol.weights;
  o.bias = sol.bias;

  auto score = [&](const LabeledSet& s) {
    std::vector<double> pred;
    for (const auto& d : s.descriptors) pred.push_back(o.predict(d));
    return r2_score(pred, s.values);
  };
  fit.train_r2 = score(train);
  if (validation != nullptr && validation->size() >= 2) fit.validation_r2 = score(*validation);
  return fit;
}

nlohmann::json oracle_to_json(const PropertyOracle& o) {
  nlohmann::json names = nlohmann::json::array();
  for (int c : o.selected) names.push_back(descriptor_names()[static_cast<std::size_t>(c)]);
  return {
      {"schema_version", 1},     {"property_name", o.property_name}, {"selected", o.selected},
      {"selected_names", names}, {"weights", o.weights},             {"bias", o.bias},
      {"scaler", {{"min", o.scaler.min}, {"max", o.scaler.max}}},
  };
}

PropertyOracle oracle_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1) throw DesignError("unsupported oracle schema_version");
  PropertyOracle o;
  o.property_name = j.at("property_name").get<std::string>();
  o.selected = j.at("selected").get<std::vector<int>>();
  o.weights = j.at("weights").get<std::vector<double>>();
  o.bias = j.at("bias").get<double>();
  o.scaler.min = j.at("scaler").at("min").get<std::vector<double>>();
  o.scaler.max = j.at("scaler").at("max").get<std::vector<double>>();
  if (o.weights.size() != o.selected.size()) throw DesignError("oracle weights and selection differ in length");
  if (o.scaler.min.size() != kDescriptorCount || o.scaler.max.size() != kDescriptorCount) {
    throw DesignError("oracle scaler does not match the descriptor schema");
  }
  for (int c : o.selected) {
    if (c < 0 || static_cast<std::size_t>(c) >= kDescriptorCount) throw DesignError("selected index out of range");
  }
  return o;
}

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(std::vector<std::string> tokens, int k) : k_(k) {
  if (k < 1) throw DesignError("context length must be >= 1");
  tokens_.push_back(kEosToken);
  for (std::string& t : tokens) {
    if (t == kEosToken) continue;
    tokens_.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) throw DesignError("duplicate policy token " + tokens_[i]);
  }
}

Policy Policy::fit(std::span<const std::vector<std::string>> sequences, int k, double smoothing) {
  if (!(smoothing > 0.0)) throw DesignError("smoothing must be positive");
  std::set<std::string> seen;
  for (const auto& s : sequences) seen.insert(s.begin(), s.end());
  Policy p(std::vector<std::string>(seen.begin(), seen.end()), k);
  std::map<Context, std::vector<double>> counts;
  for (const auto& s : sequences) {
    std::vector<int> seq = p.encode_tokens(s);
    seq.push_back(kEos);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      auto& c = counts[p.context_at(seq, i)];
      if (c.empty()) c.assign(static_cast<std::size_t>(p.size()), 0.0);
      c[static_cast<std::size_t>(seq[i])] += 1.0;
    }
  }
  for (auto& [ctx, c] : counts) {
    for (double& x : c) x = std::log(x + smoothing);
    p.logits_.emplace(ctx, std::move(c));
  }
  return p;
}

std::optional<int> Policy::index_of(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Policy::Context Policy::context_at(std::span<const int> seq, std::size_t pos) const {
  Context ctx(static_cast<std::size_t>(k_), kBos);
  for (std::size_t j = 0; j < static_cast<std::size_t>(k_) && j < pos; ++j) {
    ctx[static_cast<std::size_t>(k_) - 1 - j] = seq[pos - 1 - j];
  }
  return ctx;
}

std::vector<double> Policy::logits(const Context& ctx) const {
  auto it = logits_.find(ctx);
  if (it == logits_.end()) return std::vector<double>(static_cast<std::size_t>(size()), 0.0);
  return it->second;
}

std::vector<double> Policy::distribution(const Context& ctx) const {
  std::vector<double> p = logits(ctx);
  double mx = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& x : p) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : p) x /= total;
  return p;
}

void Policy::set_logits(const Context& ctx, std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(size())) throw DesignError("logit vector has the wrong size");
  if (ctx.size() != static_cast<std::size_t>(k_)) throw DesignError("context has the wrong length");
  logits_[ctx] = std::move(values);
}

void Policy::add_to_logits(const Context& ctx, std::span<const double> delta) {
  auto [it, inserted] = logits_.try_emplace(ctx, static_cast<std::size_t>(size()), 0.0);
  for (std::size_t i = 0; i < delta.size(); ++i) it->second[i] += delta[i];
}

std::vector<int> Policy::encode_tokens(std::span<const std::string> seq) const {
  std::vector<int> out;
  out.reserve(seq.size());
  for (const std::string& t : seq) {
    auto i = index_of(t);
    if (!i) throw DesignError("token not in policy vocabulary: " + t);
    out.push_back(*i);
  }
  return out;
}

nlohmann::json policy_to_json(const Policy& p) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [ctx, logits] : p.table()) table.push_back({{"context", ctx}, {"logits", logits}});
  std::vector<std::string> tokens(p.tokens().begin() + 1, p.tokens().end());
  return {{"schema_version", 1}, {"context_length", p.context_length()}, {"tokens", tokens}, {"table", table}};
}

Policy policy_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1) throw DesignError("unsupported policy schema_version");
  Policy p(j.at("tokens").get<std::vector<std::string>>(), j.at("context_length").get<int>());
  for (const auto& row : j.at("table")) {
    p.set_logits(row.at("context").get<Policy::Context>(), row.at("logits").get<std::vector<double>>());
  }
  return p;
}

double sequence_log_prob(const Policy& p, std::span<const int> seq) {
  double lp = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::vector<double> dist = p.distribution(p.context_at(seq, i));
    lp += std::log(dist[static_cast<std::size_t>(seq[i])]);
  }
  return lp;
}

double sequence_log_prob(const Policy& p, std::span<const std::string> tokens) {
  std::vector<int> seq = p.encode_tokens(tokens);
  seq.push_back(Policy::kEos);
  return sequence_log_prob(p, seq);
}

namespace {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<PolicySample> sample_sequences(const Policy& p, int n, int max_len, std::uint64_t seed,
                                           std::uint64_t stream) {
  if (n < 1) throw DesignError("sample count must be >= 1");
  if (max_len < 1) throw DesignError("max_len must be >= 1");
  std::vector<PolicySample> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng = make_stream(seed, stream, static_cast<std::uint64_t>(i));
    PolicySample& s = out[static_cast<std::size_t>(i)];
    while (static_cast<int>(s.indices.size()) < max_len) {
      std::vector<double> dist = p.distribution(p.context_at(s.indices, s.indices.size()));
      double h = 0.0;
      for (double x : dist) h -= x > 0.0 ? x * std::log(x) : 0.0;
      s.step_entropies.push_back(std::max(h, 0.0));
      double u = unit_uniform(rng), acc = 0.0;
      int pick = static_cast<int>(dist.size()) - 1;
      for (std::size_t t = 0; t < dist.size(); ++t) {
        acc += dist[t];
        if (u < acc) {
          pick = static_cast<int>(t);
          break;
        }
      }
      while (dist[static_cast<std::size_t>(pick)] == 0.0 && pick > 0) --pick;
      s.indices.push_back(pick);
      if (pick == Policy::kEos) {
        s.terminated = true;
        break;
      }
    }
  }
  return out;
}

std::string SampleDecoder::render(const Policy& p, const PolicySample& s) const {
  std::string out;
  for (int i : s.indices) {
    if (i == Policy::kEos) break;
    if (format_ == SampleFormat::kHappy && !out.empty()) out += ' ';
    out += p.tokens()[static_cast<std::size_t>(i)];
  }
  return out;
}

const DecodedSample& SampleDecoder::decode(const std::string& text) {
  auto it = cache_.find(text);
  if (it == cache_.end()) it = cache_.emplace(text, decode_sample(text, format_, vocab_)).first;
  return it->second;
}

SampledBatch sample_batch(const Policy& p, int n, int max_len, std::uint64_t seed, SampleDecoder& decoder,
                          std::uint64_t stream) {
  SampledBatch out;
  out.sequences = sample_sequences(p, n, max_len, seed, stream);
  for (const PolicySample& s : out.sequences) {
    std::string text = decoder.render(p, s);
    out.batch.push_back(text, s.terminated ? decoder.decode(text) : DecodedSample{});
    out.batch.step_entropies.back() = s.step_entropies;
  }
  return out;
}

std::map<Policy::Context, std::vector<double>> policy_gradient(const Policy& p,
                                                               std::span<const PolicySample> samples,
                                                               std::span<const double> rewards) {
  if (samples.size() != rewards.size()) throw DesignError("rewards are not aligned with the batch");
  std::map<Policy::Context, std::vector<double>> grad;
  if (samples.empty()) return grad;
  auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) return grad;
  double baseline = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double adv = rewards[i] - baseline;
    if (adv == 0.0) continue;
    const auto& seq = samples[i].indices;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      Policy::Context ctx = p.context_at(seq, t);
      std::vector<double> dist = p.distribution(ctx);
      auto& g = grad[ctx];
      if (g.empty()) g.assign(dist.size(), 0.0);
      for (std::size_t v = 0; v < dist.size(); ++v) g[v] -= adv * dist[v];
      g[static_cast<std::size_t>(seq[t])] += adv;
    }
  }
  return grad;
}

Policy reinforce_update(const Policy& p, std::span<const PolicySample> samples, std::span<const double> rewards,
                        double learning_rate) {
  Policy next = p;
  for (auto& [ctx, g] : policy_gradient(p, samples, rewards)) {
    for (double& x : g) x *= learning_rate;
    next.add_to_logits(ctx, g);
  }
  return next;
}

// ---------------------------------------------------------------------------
// Rewards

void RewardConfig::validate() const {
  auto check = [](double w, const char* name) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DesignError(std::string(name) + " weight must be finite and >= 0");
  };
  for (const auto& t : properties) {
    check(t.weight, "property");
    if (!std::isfinite(t.value)) throw DesignError("property target must be finite");
  }
  check(diversity_weight, "diversity");
  check(similarity_weight, "similarity");
  check(specificity_weight, "specificity");
  check(sa_weight, "sa");
  check(scaffold_weight, "scaffold");
  for (double v : {diversity_target, similarity_target, specificity_target, sa_threshold}) {
    if (!std::isfinite(v)) throw DesignError("reward thresholds must be finite");
  }
  if (batch_size < 1) throw DesignError("batch_size must be >= 1");
  if (max_len < 1) throw DesignError("max_len must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw DesignError("learning_rate must be positive");
}

namespace {

TargetMode mode_from_string(const std::string& s) {
  if (s == "match") return TargetMode::kMatch;
  if (s == "greater_than") return TargetMode::kGreaterThan;
  if (s == "less_than") return TargetMode::kLessThan;
  throw DesignError("unknown target mode " + s);
}

const char* mode_name(TargetMode m) {
  switch (m) {
    case TargetMode::kMatch:
      return "match";
    case TargetMode::kGreaterThan:
      return "greater_than";
    case TargetMode::kLessThan:
      return "less_than";
  }
  return "match";
}

}  // namespace

RewardConfig reward_config_from_json(const nlohmann::json& j) {
  RewardConfig c;
  if (j.contains("properties")) {
    for (const auto& p : j.at("properties")) {
      PropertyTarget t;
      t.oracle = oracle_from_json(p.at("oracle"));
      t.mode = mode_from_string(p.value("mode", std::string("match")));
      t.value = p.at("value").get<double>();
      t.weight = p.value("weight", 1.0);
      c.properties.push_back(std::move(t));
    }
  }
  c.diversity_target = j.value("diversity_target", c.diversity_target);
  c.similarity_target = j.value("similarity_target", c.similarity_target);
  c.specificity_target = j.value("specificity_target", c.specificity_target);
  c.sa_threshold = j.value("sa_threshold", c.sa_threshold);
  c.diversity_weight = j.value("diversity_weight", c.diversity_weight);
  c.similarity_weight = j.value("similarity_weight", c.similarity_weight);
  c.specificity_weight = j.value("specificity_weight", c.specificity_weight);
  c.sa_weight = j.value("sa_weight", c.sa_weight);
  c.scaffold_weight = j.value("scaffold_weight", c.scaffold_weight);
  if (j.contains("scaffold") && !j.at("scaffold").is_null()) c.scaffold = j.at("scaffold").get<std::string>();
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_len = j.value("max_len", c.max_len);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.validate();
  return c;
}

nlohmann::json reward_config_to_json(const RewardConfig& c) {
  nlohmann::json props = nlohmann::json::array();
  for (const auto& t : c.properties) {
    props.push_back({{"oracle", oracle_to_json(t.oracle)}, {"mode", mode_name(t.mode)}, {"value", t.value},
                     {"weight", t.weight}});
  }
  return {
      {"properties", props},
      {"diversity_target", c.diversity_target},
      {"similarity_target", c.similarity_target},
      {"specificity_target", c.specificity_target},
      {"sa_threshold", c.sa_threshold},
      {"diversity_weight", c.diversity_weight},
      {"similarity_weight", c.similarity_weight},
      {"specificity_weight", c.specificity_weight},
      {"sa_weight", c.sa_weight},
      {"scaffold_weight", c.scaffold_weight},
      {"scaffold", c.scaffold ? nlohmann::json(*c.scaffold) : nlohmann::json(nullptr)},
      {"batch_size", c.batch_size},
      {"max_len", c.max_len},
      {"learning_rate", c.learning_rate},
  };
}

double target_term(TargetMode mode, double value, double target) {
  switch (mode) {
    case TargetMode::kMatch:
      return -std::abs(value - target);
    case TargetMode::kGreaterThan:
      return std::min(value, target);
    case TargetMode::kLessThan:
      return -std::max(value, target);
  }
  return 0.0;
}

RewardResult compute_rewards(const GenerationBatch& batch, const RewardConfig& config, const RewardContext& ctx) {
  if (batch.size() == 0) throw DesignError("cannot reward an empty batch");
  config.validate();
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.valid(i)) valid.push_back(i);
  }

  RewardResult out;
  std::vector<std::vector<double>> columns;  // per term, aligned with `valid`
  auto add_term = [&](std::string name, double weight, auto&& raw_for) {
    if (weight == 0.0) return;
    out.terms.push_back(std::move(name));
    out.weights.push_back(weight);
    std::vector<double> col;
    col.reserve(valid.size());
    for (std::size_t k = 0; k < valid.size(); ++k) col.push_back(raw_for(k));
    columns.push_back(std::move(col));
  };

  for (std::size_t p = 0; p < config.properties.size(); ++p) {
    const PropertyTarget& t = config.properties[p];
    std::string name = "property:" + (t.oracle.property_name.empty() ? std::to_string(p) : t.oracle.property_name);
    add_term(name, t.weight, [&](std::size_t k) {
      return target_term(t.mode, t.oracle.predict(*batch.decoded[valid[k]]), t.value);
    });
  }
  if (config.diversity_weight != 0.0) {
    std::vector<double> div(valid.size(), 0.0);
    if (valid.size() >= 2) div = diversity_contributions(batch);
    add_term("diversity", config.diversity_weight, [&](std::size_t k) {
      return target_term(TargetMode::kGreaterThan, div[k], config.diversity_target);
    });
  }
  bool needs_train = !valid.empty() && (config.similarity_weight != 0.0 || config.specificity_weight != 0.0);
  if (needs_train && (ctx.train == nullptr || ctx.train->size() == 0)) {
    throw DesignError("similarity/specificity terms need a training set");
  }
  if (config.similarity_weight != 0.0) {
    add_term("similarity", config.similarity_weight, [&](std::size_t k) {
      double s = nearest_train_similarity(*batch.fingerprints[valid[k]], *ctx.train);
      return target_term(TargetMode::kMatch, s, config.similarity_target);
    });
  }
  if (config.specificity_weight != 0.0) {
    std::vector<double> spec;
    if (!valid.empty()) spec = specificity_contributions(batch, *ctx.train);
    add_term("specificity", config.specificity_weight, [&](std::size_t k) {
      return target_term(TargetMode::kMatch, spec[k], config.specificity_target);
    });
  }
  if (config.sa_weight != 0.0) {
    if (!valid.empty() && ctx.sa == nullptr) throw DesignError("SA term needs a reference model");
    add_term("sa", config.sa_weight, [&](std::size_t k) {
      return target_term(TargetMode::kLessThan, sa_score(*batch.decoded[valid[k]], *ctx.sa), config.sa_threshold);
    });
  }
  if (config.scaffold && config.scaffold_weight != 0.0) {
    if (ctx.vocab != nullptr && !ctx.vocab->find_token(*config.scaffold)) {
      throw DesignError("unknown scaffold token " + *config.scaffold);
    }
    add_term("scaffold", config.scaffold_weight, [&](std::size_t k) {
      const auto& toks = batch.tokens[valid[k]];
      return std::find(toks.begin(), toks.end(), *config.scaffold) != toks.end() ? 1.0 : 0.0;
    });
  }

  const std::size_t terms = out.terms.size();
  out.samples.assign(batch.size(), RewardBreakdown{false, std::vector<double>(terms, 0.0),
                                                   std::vector<double>(terms, 0.0), 0.0});
  for (std::size_t t = 0; t < terms; ++t) {
    const auto& col = columns[t];
    if (col.empty()) continue;
    auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    double span = *hi - *lo;
    for (std::size_t k = 0; k < valid.size(); ++k) {
      RewardBreakdown& b = out.samples[valid[k]];
      b.raw[t] = col[k];
      b.scaled[t] = span == 0.0 ? 0.5 : (col[k] - *lo) / span;
    }
  }
  out.rewards.assign(batch.size(), 0.0);
  for (std::size_t i : valid) {
    RewardBreakdown& b = out.samples[i];
    b.valid = true;
    for (std::size_t t = 0; t < terms; ++t) b.reward += out.weights[t] * b.scaled[t];
    out.rewards[i] = b.reward;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

nlohmann::json to_json(const TrajectoryStep& s) {
  nlohmann::json j = to_json(s.metrics);
  j["step"] = s.step;
  j["mean_reward"] = s.mean_reward;
  return j;
}

RlResult rl_train(const Policy& initial, const RewardConfig& config, int steps, std::uint64_t seed,
                  const RewardContext& ctx, SampleDecoder& decoder,
                  const std::function<void(const TrajectoryStep&)>& on_step) {
  config.validate();
  if (steps < 0) throw DesignError("steps must be >= 0");
  RlResult out{initial, {}};
  EvaluationContext eval{ctx.train, ctx.sa, ctx.vocab, config.scaffold};
  for (int step = 0; step < steps; ++step) {
    SampledBatch sb = sample_batch(out.policy, config.batch_size, config.max_len, seed, decoder,
                                   static_cast<std::uint64_t>(step));
    RewardResult r = compute_rewards(sb.batch, config, ctx);
    TrajectoryStep rec;
    rec.step = step;
    rec.mean_reward = std::accumulate(r.rewards.begin(), r.rewards.end(), 0.0) / static_cast<double>(r.rewards.size());
    rec.metrics = evaluate_batch(sb.batch, eval);
    if (on_step) on_step(rec);
    out.trajectory.push_back(std::move(rec));
    out.policy = reinforce_update(out.policy, sb.sequences, r.rewards, config.learning_rate);
  }
  return out;
}

}  // namespace polyhappy
