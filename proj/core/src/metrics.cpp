#include "polyhappy/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "polyhappy/happy.hpp"

namespace polyhappy {

namespace {

std::vector<std::size_t> valid_indices(const GenerationBatch& batch) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.valid(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> require_valid(const GenerationBatch& batch, std::size_t at_least, const char* metric) {
  std::vector<std::size_t> idx = valid_indices(batch);
  if (idx.size() < at_least) {
    throw MetricError(std::string(metric) + " needs at least " + std::to_string(at_least) + " valid samples");
  }
  return idx;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Batches

DecodedSample decode_sample(const std::string& text, SampleFormat format, const Vocabulary* vocab) {
  DecodedSample out;
  MolGraph g;
  try {
    if (format == SampleFormat::kHappy) {
      if (vocab == nullptr) throw MetricError("HAPPY samples need a vocabulary");
      HappyString s = parse_happy(text);
      for (const std::string& t : flatten(s)) {
        if (t != "(" && t != ")") out.tokens.emplace_back(base_token(t));
      }
      g = decode(s, *vocab);
    } else {
      g = parse_smiles(text);
    }
  } catch (const MetricError&) {
    throw;
  } catch (const std::exception&) {
    out.tokens.clear();
    return out;
  }
  if (!check_valence(g).valid()) return out;
  if (format == SampleFormat::kSmiles && vocab != nullptr) {
    try {
      for (const std::string& t : flatten(encode(g, *vocab))) {
        if (t != "(" && t != ")") out.tokens.emplace_back(base_token(t));
      }
    } catch (const std::exception&) {
      out.tokens.clear();
    }
  }
  out.canonical = write_smiles(g);
  out.fingerprint = morgan_fingerprint(g);
  out.graph = std::move(g);
  return out;
}

std::size_t GenerationBatch::valid_count() const {
  return static_cast<std::size_t>(std::count_if(decoded.begin(), decoded.end(), [](const auto& d) { return d.has_value(); }));
}

void GenerationBatch::push_back(std::string sample, DecodedSample d) {
  samples.push_back(std::move(sample));
  decoded.push_back(std::move(d.graph));
  fingerprints.push_back(d.fingerprint);
  canonical.push_back(std::move(d.canonical));
  tokens.push_back(std::move(d.tokens));
  step_entropies.emplace_back();
}

GenerationBatch make_batch(std::span<const std::string> samples, SampleFormat format, const Vocabulary* vocab) {
  GenerationBatch batch;
  for (const std::string& s : samples) batch.push_back(s, decode_sample(s, format, vocab));
  return batch;
}

TrainingSet TrainingSet::from_graphs(std::span<const MolGraph> graphs) {
  TrainingSet t;
  for (const MolGraph& g : graphs) {
    t.canonical.insert(write_smiles(g));
    t.fingerprints.push_back(morgan_fingerprint(g));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Metrics

NearestNeighbor nearest_train_neighbor(const FingerprintBits& fp, const TrainingSet& train) {
  if (train.size() == 0) throw MetricError("empty training set");
  NearestNeighbor best;
  for (std::size_t i = 0; i < train.size(); ++i) {
    double s = tanimoto(fp, train.fingerprints[i]);
    if (best.index < 0 || s > best.similarity) best = {static_cast<int>(i), s};
  }
  return best;
}

double nearest_train_similarity(const FingerprintBits& fp, const TrainingSet& train) {
  return nearest_train_neighbor(fp, train).similarity;
}

double validity_fraction(const GenerationBatch& batch) {
  if (batch.size() == 0) throw MetricError("validity of an empty batch");
  return static_cast<double>(batch.valid_count()) / static_cast<double>(batch.size());
}

double novelty_fraction(const GenerationBatch& batch, const TrainingSet& train) {
  auto idx = require_valid(batch, 1, "novelty");
  std::size_t novel = 0;
  for (std::size_t i : idx) novel += train.canonical.contains(batch.canonical[i]) ? 0 : 1;
  return static_cast<double>(novel) / static_cast<double>(idx.size());
}

double mean_similarity(const GenerationBatch& batch, const TrainingSet& train) {
  auto idx = require_valid(batch, 1, "similarity");
  std::vector<double> sims;
  for (std::size_t i : idx) sims.push_back(nearest_train_similarity(*batch.fingerprints[i], train));
  return mean(sims);
}

std::vector<double> diversity_contributions(const GenerationBatch& batch) {
  auto idx = require_valid(batch, 2, "internal diversity");
  const std::size_t n = idx.size();
  const std::size_t k = std::min<std::size_t>(10, n - 1);
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      sim[a][b] = sim[b][a] = tanimoto(*batch.fingerprints[idx[a]], *batch.fingerprints[idx[b]]);
    }
  }
  std::vector<double> out;
  out.reserve(n);
  std::vector<double> peers;
  for (std::size_t a = 0; a < n; ++a) {
    peers.clear();
    for (std::size_t b = 0; b < n; ++b) {
      if (b != a) peers.push_back(sim[a][b]);
    }
    std::partial_sort(peers.begin(), peers.begin() + static_cast<std::ptrdiff_t>(k), peers.end(), std::greater<>());
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += 1.0 - peers[j];
    out.push_back(s / static_cast<double>(k));
  }
  return out;
}

double internal_diversity(const GenerationBatch& batch) { return mean(diversity_contributions(batch)); }

std::vector<double> specificity_contributions(const GenerationBatch& batch, const TrainingSet& train) {
  auto idx = require_valid(batch, 1, "specificity");
  std::vector<int> nearest;
  std::map<int, int> counts;
  for (std::size_t i : idx) {
    int t = nearest_train_neighbor(*batch.fingerprints[i], train).index;
    nearest.push_back(t);
    ++counts[t];
  }
  const double n = static_cast<double>(batch.size());
  std::vector<double> out;
  for (int t : nearest) out.push_back(1.0 - counts[t] / n);
  return out;
}

double specificity(const GenerationBatch& batch, const TrainingSet& train) {
  return mean(specificity_contributions(batch, train));
}

double shannon_entropy(std::span<const double> p) {
  double total = 0.0, h = 0.0;
  for (double x : p) {
    if (x < 0.0 || !std::isfinite(x)) throw MetricError("distribution has a negative or non-finite entry");
    total += x;
    if (x > 0.0) h -= x * std::log(x);
  }
  if (std::abs(total - 1.0) > 1e-9) throw MetricError("distribution is not normalized");
  return std::max(h, 0.0);
}

double policy_entropy(std::span<const std::vector<std::vector<double>>> distributions) {
  double sum = 0.0;
  std::size_t steps = 0;
  for (const auto& sequence : distributions) {
    for (const auto& p : sequence) {
      sum += shannon_entropy(p);
      ++steps;
    }
  }
  if (steps == 0) throw MetricError("entropy needs at least one decoding step");
  return sum / static_cast<double>(steps);
}

double mean_step_entropy(const GenerationBatch& batch) {
  double sum = 0.0;
  std::size_t steps = 0;
  for (const auto& seq : batch.step_entropies) {
    for (double h : seq) sum += h;
    steps += seq.size();
  }
  if (steps == 0) throw MetricError("batch carries no decoding steps");
  return sum / static_cast<double>(steps);
}

double scaffold_fraction(const GenerationBatch& batch, const std::string& token, const Vocabulary& vocab) {
  if (!vocab.find_token(token)) throw MetricError("unknown scaffold token " + token);
  auto idx = require_valid(batch, 1, "scaffold fraction");
  std::size_t hits = 0;
  for (std::size_t i : idx) {
    const auto& t = batch.tokens[i];
    hits += std::find(t.begin(), t.end(), token) != t.end() ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

double scaffold_fraction(const GenerationBatch& batch, const Fragment& scaffold) {
  auto idx = require_valid(batch, 1, "scaffold fraction");
  std::size_t hits = 0;
  for (std::size_t i : idx) hits += contains_scaffold(*batch.decoded[i], scaffold) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

bool contains_scaffold(const MolGraph& g, const Fragment& scaffold) {
  const MolGraph& q = scaffold.graph;
  std::vector<int> order;  // query atoms, BFS so each has a mapped neighbor
  {
    std::vector<bool> seen(static_cast<std::size_t>(q.atom_count()), false);
    for (int s = 0; s < q.atom_count(); ++s) {
      if (seen[static_cast<std::size_t>(s)] || q.atom(s).is_wildcard()) continue;
      std::vector<int> queue{s};
      seen[static_cast<std::size_t>(s)] = true;
      for (std::size_t h = 0; h < queue.size(); ++h) {
        order.push_back(queue[h]);
        for (const Neighbor& nb : q.neighbors(queue[h])) {
          if (!seen[static_cast<std::size_t>(nb.atom)] && !q.atom(nb.atom).is_wildcard()) {
            seen[static_cast<std::size_t>(nb.atom)] = true;
            queue.push_back(nb.atom);
          }
        }
      }
    }
  }
  if (order.empty()) return true;

  std::vector<int> stubs(static_cast<std::size_t>(q.atom_count()), 0);
  for (const Port& p : scaffold.ports) ++stubs[static_cast<std::size_t>(p.atom)];
  auto compatible = [&](int qa, int ga) {
    const Atom& x = q.atom(qa);
    const Atom& y = g.atom(ga);
    return x.element == y.element && x.formal_charge == y.formal_charge && x.aromatic == y.aromatic &&
           x.hydrogens == y.hydrogens && q.degree(qa) + stubs[static_cast<std::size_t>(qa)] == g.degree(ga);
  };

  std::vector<int> map(static_cast<std::size_t>(q.atom_count()), -1);
  std::vector<bool> used(static_cast<std::size_t>(g.atom_count()), false);
  std::function<bool(std::size_t)> extend = [&](std::size_t depth) -> bool {
    if (depth == order.size()) return true;
    int qa = order[depth];
    for (int ga = 0; ga < g.atom_count(); ++ga) {
      if (used[static_cast<std::size_t>(ga)] || !compatible(qa, ga)) continue;
      bool ok = true;
      for (const Neighbor& nb : q.neighbors(qa)) {
        int mapped = map[static_cast<std::size_t>(nb.atom)];
        if (mapped < 0) continue;
        int gb = g.find_bond(ga, mapped);
        if (gb < 0 || g.bond(gb).order != q.bond(nb.bond).order) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      map[static_cast<std::size_t>(qa)] = ga;
      used[static_cast<std::size_t>(ga)] = true;
      if (extend(depth + 1)) return true;
      map[static_cast<std::size_t>(qa)] = -1;
      used[static_cast<std::size_t>(ga)] = false;
    }
    return false;
  };
  return extend(0);
}

// ---------------------------------------------------------------------------
// SA-lite

SaModel SaModel::fit(std::span<const MolGraph> reference) {
  if (reference.empty()) throw MetricError("SA model needs a non-empty reference corpus");
  SaModel m;
  for (const MolGraph& g : reference) {
    auto env = morgan_environments(g, kRadius);
    for (int a = 0; a < g.atom_count(); ++a) {
      if (g.atom(a).is_wildcard() || g.atom(a).element == Element::kH) continue;
      int c = ++m.counts_[env[kRadius][static_cast<std::size_t>(a)]];
      m.max_count_ = std::max(m.max_count_, c);
    }
  }
  if (m.max_count_ == 0) throw MetricError("SA reference corpus has no heavy atoms");
  return m;
}

int SaModel::frequency(std::uint64_t env) const {
  auto it = counts_.find(env);
  return it == counts_.end() ? 0 : it->second;
}

SaComponents sa_components(const MolGraph& g, const SaModel& model) {
  SaComponents c;
  auto env = morgan_environments(g, SaModel::kRadius);
  const double log_max = std::log(model.max_frequency() + 1.0);
  int heavy = 0;
  double fam = 0.0;
  for (int a = 0; a < g.atom_count(); ++a) {
    if (g.atom(a).is_wildcard() || g.atom(a).element == Element::kH) continue;
    ++heavy;
    int f = model.frequency(env[SaModel::kRadius][static_cast<std::size_t>(a)]);
    fam += std::log((f + 1.0) / (model.max_frequency() + 1.0)) / log_max;
  }
  c.familiarity = heavy == 0 ? 0.0 : fam / heavy;

  const double n = heavy;
  c.size_penalty = heavy == 0 ? 0.0 : std::pow(n, 1.005) - n;

  std::vector<int> membership(static_cast<std::size_t>(g.atom_count()), 0);
  bool macrocycle = false;
  for (const Ring& r : find_rings(g)) {
    for (int a : r.atoms) ++membership[static_cast<std::size_t>(a)];
    macrocycle |= r.size() > 8;
  }
  int fused = static_cast<int>(std::count_if(membership.begin(), membership.end(), [](int m) { return m >= 2; }));
  c.fusion_penalty = std::log10(fused + 1.0);
  c.macrocycle_penalty = macrocycle ? std::log10(2.0) : 0.0;

  double raw = -c.familiarity + c.size_penalty + c.fusion_penalty + c.macrocycle_penalty;
  c.score = 1.0 + 9.0 * std::min(1.0, std::max(0.0, raw) / 2.0);
  return c;
}

double sa_score(const MolGraph& g, const SaModel& model) { return sa_components(g, model).score; }

double mean_sa(const GenerationBatch& batch, const SaModel& model) {
  auto idx = require_valid(batch, 1, "SA");
  std::vector<double> s;
  for (std::size_t i : idx) s.push_back(sa_score(*batch.decoded[i], model));
  return mean(s);
}

// ---------------------------------------------------------------------------
// Report

MetricsReport evaluate_batch(const GenerationBatch& batch, const EvaluationContext& ctx) {
  MetricsReport r;
  r.validity = validity_fraction(batch);
  const std::size_t valid = batch.valid_count();
  if (valid >= 1 && ctx.train != nullptr && ctx.train->size() > 0) {
    r.novelty = novelty_fraction(batch, *ctx.train);
    r.mean_similarity = mean_similarity(batch, *ctx.train);
    r.specificity = specificity(batch, *ctx.train);
  }
  if (valid >= 2) r.internal_diversity = internal_diversity(batch);
  if (valid >= 1 && ctx.sa != nullptr) r.mean_sa = mean_sa(batch, *ctx.sa);
  bool has_steps = std::any_of(batch.step_entropies.begin(), batch.step_entropies.end(),
                               [](const auto& s) { return !s.empty(); });
  if (has_steps) r.entropy = mean_step_entropy(batch);
  if (valid >= 1 && ctx.scaffold_token && ctx.vocab != nullptr) {
    r.scaffold_fraction = scaffold_fraction(batch, *ctx.scaffold_token, *ctx.vocab);
  }
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {
      {"validity", r.validity},
      {"novelty", opt(r.novelty)},
      {"mean_similarity", opt(r.mean_similarity)},
      {"internal_diversity", opt(r.internal_diversity)},
      {"mean_sa", opt(r.mean_sa)},
      {"specificity", opt(r.specificity)},
      {"entropy", opt(r.entropy)},
      {"scaffold_fraction", opt(r.scaffold_fraction)},
  };
}

}  // namespace polyhappy
