// polyhappy: command-line pipelines over the polyhappy library.
//
// Every subcommand accepts --config (JSON object, schema_version 1) and
// --seed. Config keys are option names with dashes replaced by
// underscores; flags given on the command line win over the config.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 internal invariant violation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif
#include <nlohmann/json.hpp>

#include "polyhappy/attribute.hpp"
#include "polyhappy/chemfeat.hpp"
#include "polyhappy/dataset.hpp"
#include "polyhappy/design.hpp"
#include "polyhappy/forge.hpp"
#include "polyhappy/happy.hpp"
#include "polyhappy/metrics.hpp"
#include "polyhappy/molgraph.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polyhappy;

namespace {

constexpr int kSchemaVersion = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

json load_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    atomic_write(out, text);
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::string text = read_file(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = nl + 1;
  }
  return lines;
}

// Looks for --config before CLI11 runs so that config values can seed the
// option defaults.
std::optional<std::string> scan_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

class Config {
 public:
  Config() = default;
  explicit Config(json j) : j_(std::move(j)) {
    if (!j_.is_object()) throw DataError("config must be a JSON object");
    if (!j_.contains("schema_version")) throw DataError("config lacks schema_version");
    if (j_.at("schema_version") != kSchemaVersion) {
      throw DataError("unsupported config schema_version " + j_.at("schema_version").dump());
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw() const { return j_; }

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw DataError("config key " + key + ": " + e.what());
    }
  }

 private:
  json j_ = json::object();
};

std::string key_of(const std::string& flag) {
  std::string k = flag.substr(flag.find_first_not_of('-'));
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

// Binds an option whose default comes from the config when present.
template <class T>
CLI::Option* bind_opt(CLI::App* app, const Config& cfg, const std::string& flag, T& target, const std::string& help,
                  bool required = false) {
  std::string key = key_of(flag);
  target = cfg.get<T>(key, target);
  CLI::Option* opt = app->add_option(flag, target, help)->capture_default_str();
  if (required && !cfg.has(key)) opt->required();
  return opt;
}

IngestResult load_records(const fs::path& path) {
  IngestResult r = ingest_file(path);
  for (const auto& x : r.rejects) {
    std::cerr << "warning: " << path.string() << ":" << x.line << ": rejected " << x.smiles << ": " << x.reason
              << "\n";
  }
  for (const auto& d : r.duplicates) {
    std::cerr << "warning: " << path.string() << ":" << d.line << ": duplicate of line " << d.first_line << "\n";
  }
  return r;
}

std::vector<MolGraph> graphs_of(const std::vector<DatasetRecord>& records) {
  std::vector<MolGraph> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(parse_smiles(r.canonical));
  return out;
}

Vocabulary load_vocab(const fs::path& path) {
  try {
    return vocabulary_from_json(load_json(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

SampleFormat parse_format(const std::string& s) {
  if (s == "happy") return SampleFormat::kHappy;
  if (s == "smiles") return SampleFormat::kSmiles;
  throw UsageError("unknown format " + s + " (expected happy or smiles)");
}

std::vector<std::vector<std::string>> token_sequences(const std::vector<DatasetRecord>& records,
                                                      SampleFormat format, const Vocabulary* vocab) {
  std::vector<std::vector<std::string>> seqs;
  for (const auto& r : records) {
    if (format == SampleFormat::kSmiles) {
      seqs.push_back(tokenize_smiles(r.canonical));
    } else {
      seqs.push_back(flatten(encode(parse_smiles(r.canonical), *vocab)));
    }
  }
  return seqs;
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* app, const Config& cfg, Common& c) {
  app->add_option("--config", c.config, "JSON config (schema_version 1)");
  bind_opt(app, cfg, "--seed", c.seed, "Random seed");
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input, out, rejects, splits;
  int folds = 5;
  int repeats = 1;
};

void run_ingest(const IngestArgs& a, std::uint64_t seed) {
  IngestResult r = load_records(a.input);
  atomic_write(a.out, records_csv(r.records));
  if (!a.rejects.empty()) atomic_write(a.rejects, rejects_csv(r));
  if (!a.splits.empty()) {
    SplitPlan plan{a.folds, a.repeats, seed};
    if (r.records.size() < static_cast<std::size_t>(std::max(a.folds, 1))) {
      throw DataError("fewer records than folds");
    }
    write_json(a.splits, {{"schema_version", kSchemaVersion},
                          {"n_folds", plan.n_folds},
                          {"n_repeats", plan.n_repeats},
                          {"seed", plan.seed},
                          {"assignments", kfold_split(r.records.size(), plan)}});
  }
  std::cerr << r.records.size() << " records, " << r.rejects.size() << " rejected, " << r.duplicates.size()
            << " duplicates\n";
}

struct ForgeArgs {
  std::string input, out;
  long threshold = 100;
  int max_iterations = 50;
};

void run_forge(const ForgeArgs& a) {
  IngestResult r = load_records(a.input);
  if (r.records.empty()) throw DataError("no usable records in " + a.input);
  std::vector<MolGraph> corpus = graphs_of(r.records);
  ForgeResult f = forge_run(corpus, MiningConfig{a.threshold, a.max_iterations});
  write_json(a.out, vocabulary_to_json(f.vocabulary));
  std::cerr << "vocabulary " << f.vocabulary.size() << " entries after " << f.iterations << " iterations"
            << (f.converged ? "" : " (iteration cap reached)") << "\n";
}

struct CodecArgs {
  std::string vocab, input, out;
};

void run_encode(const CodecArgs& a) {
  Vocabulary vocab = load_vocab(a.vocab);
  IngestResult r = load_records(a.input);
  std::string text;
  for (const auto& rec : r.records) {
    try {
      text += to_text(encode(parse_smiles(rec.canonical), vocab));
    } catch (const HappyError& e) {
      throw DataError(rec.canonical + ": " + e.what());
    }
    text += '\n';
  }
  emit(a.out, text);
}

void run_decode(const CodecArgs& a) {
  Vocabulary vocab = load_vocab(a.vocab);
  std::vector<DatasetRecord> records;
  std::vector<std::string> lines = read_lines(a.input);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      DatasetRecord rec;
      rec.canonical = write_smiles(decode(parse_happy(lines[i]), vocab));
      rec.smiles = rec.canonical;
      records.push_back(std::move(rec));
    } catch (const std::runtime_error& e) {
      throw DataError(a.input + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  emit(a.out, records_csv(records));
}

struct StatsArgs {
  std::string vocab, input, out;
};

json mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {{"mean", nullptr}, {"sd", nullptr}, {"max", nullptr}};
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {{"mean", mean},
          {"sd", std::sqrt(ss / static_cast<double>(v.size()))},
          {"max", *std::max_element(v.begin(), v.end())}};
}

void run_stats(const StatsArgs& a) {
  Vocabulary vocab = load_vocab(a.vocab);
  IngestResult r = load_records(a.input);
  std::vector<double> happy, smiles;
  int unencodable = 0;
  for (const auto& rec : r.records) {
    try {
      double h = static_cast<double>(flatten(encode(parse_smiles(rec.canonical), vocab)).size());
      happy.push_back(h);
      smiles.push_back(static_cast<double>(tokenize_smiles(rec.canonical).size()));
    } catch (const HappyError&) {
      ++unencodable;
    }
  }
  json report = {{"schema_version", kSchemaVersion},
                 {"records", r.records.size()},
                 {"encoded", happy.size()},
                 {"unencodable", unencodable},
                 {"vocabulary_size", vocab.size()},
                 {"happy_length", mean_sd(happy)},
                 {"smiles_length", mean_sd(smiles)}};
  double hs = std::accumulate(happy.begin(), happy.end(), 0.0);
  double ss = std::accumulate(smiles.begin(), smiles.end(), 0.0);
  report["length_ratio"] = ss > 0 ? json(hs / ss) : json(nullptr);
  emit(a.out, report.dump(2) + "\n");
}

struct TrainOracleArgs {
  std::string input, out, report, property;
  int k = 10;
  double lambda = 1.0;
  int folds = 5;
};

void run_train_oracle(const TrainOracleArgs& a, std::uint64_t seed) {
  IngestResult r = load_records(a.input);
  std::vector<MolGraph> graphs;
  std::vector<double> values;
  for (const auto& rec : r.records) {
    auto it = rec.properties.find(a.property);
    if (it == rec.properties.end()) continue;
    graphs.push_back(parse_smiles(rec.canonical));
    values.push_back(it->second);
  }
  if (graphs.empty()) throw DataError("no records carry " + a.property);
  LabeledSet all = LabeledSet::from_graphs(graphs, values);

  json folds = json::array();
  std::vector<double> r2s;
  if (a.folds >= 2) {
    if (all.size() < static_cast<std::size_t>(a.folds)) throw DataError("fewer labeled records than folds");
    std::vector<int> fold_of = kfold_split(all.size(), SplitPlan{a.folds, 1, seed})[0];
    for (int f = 0; f < a.folds; ++f) {
      LabeledSet train, valid;
      for (std::size_t i = 0; i < all.size(); ++i) {
        LabeledSet& dst = fold_of[i] == f ? valid : train;
        dst.descriptors.push_back(all.descriptors[i]);
        dst.values.push_back(all.values[i]);
      }
      OracleFit fit = train_oracle(train, a.k, a.lambda, a.property, &valid);
      folds.push_back({{"fold", f}, {"train_r2", fit.train_r2}, {"validation_r2", *fit.validation_r2}});
      r2s.push_back(*fit.validation_r2);
    }
  }
  OracleFit fit = train_oracle(all, a.k, a.lambda, a.property);
  write_json(a.out, oracle_to_json(fit.oracle));

  json report = {{"schema_version", kSchemaVersion},
                 {"property", a.property},
                 {"records", all.size()},
                 {"k", a.k},
                 {"lambda", a.lambda},
                 {"train_r2", fit.train_r2},
                 {"folds", folds}};
  report["mean_validation_r2"] =
      r2s.empty() ? json(nullptr) : json(std::accumulate(r2s.begin(), r2s.end(), 0.0) / static_cast<double>(r2s.size()));
  emit(a.report, report.dump(2) + "\n");
}

struct PredictArgs {
  std::string oracle, input, out;
};

void run_predict(const PredictArgs& a) {
  PropertyOracle oracle = oracle_from_json(load_json(a.oracle));
  IngestResult r = load_records(a.input);
  std::string text = "smiles,predicted_" + oracle.property_name + "\n";
  for (const auto& rec : r.records) {
    text += rec.canonical + "," + fmt(oracle.predict(parse_smiles(rec.canonical))) + "\n";
  }
  emit(a.out, text);
}

struct PolicyArgs {
  std::string policy, input, vocab, format = "happy", save_policy;
  int context = 3;
  double smoothing = 1e-3;
};

void bind_policy(CLI::App* app, const Config& cfg, PolicyArgs& p) {
  bind_opt(app, cfg, "--policy", p.policy, "Policy JSON; fitted from --input when absent");
  bind_opt(app, cfg, "--input", p.input, "Training CSV");
  bind_opt(app, cfg, "--vocab", p.vocab, "Vocabulary JSON");
  bind_opt(app, cfg, "--format", p.format, "Token format: happy or smiles");
  bind_opt(app, cfg, "--context", p.context, "Policy context length when fitting");
  bind_opt(app, cfg, "--smoothing", p.smoothing, "Count smoothing when fitting");
  bind_opt(app, cfg, "--save-policy", p.save_policy, "Write the fitted policy here");
}

struct PolicySetup {
  SampleFormat format;
  std::optional<Vocabulary> vocab;
  std::vector<DatasetRecord> train;
  Policy policy;
};

PolicySetup setup_policy(const PolicyArgs& a, bool need_train) {
  PolicySetup s;
  s.format = parse_format(a.format);
  if (!a.vocab.empty()) s.vocab = load_vocab(a.vocab);
  if (s.format == SampleFormat::kHappy && !s.vocab) throw UsageError("--vocab is required for happy format");
  if (!a.input.empty()) s.train = load_records(a.input).records;
  if ((need_train || a.policy.empty()) && s.train.empty()) throw UsageError("--input with records is required");
  if (!a.policy.empty()) {
    s.policy = policy_from_json(load_json(a.policy));
  } else {
    auto seqs = token_sequences(s.train, s.format, s.vocab ? &*s.vocab : nullptr);
    s.policy = Policy::fit(seqs, a.context, a.smoothing);
    if (!a.save_policy.empty()) write_json(a.save_policy, policy_to_json(s.policy));
  }
  return s;
}

struct GenerateArgs {
  PolicyArgs policy;
  std::string out;
  int n = 100;
  int max_len = 64;
};

void run_generate(const GenerateArgs& a, std::uint64_t seed) {
  PolicySetup s = setup_policy(a.policy, false);
  SampleDecoder decoder(s.format, s.vocab ? &*s.vocab : nullptr);
  std::string text;
  for (const PolicySample& p : sample_sequences(s.policy, a.n, a.max_len, seed)) {
    text += decoder.render(s.policy, p) + "\n";
  }
  emit(a.out, text);
}

struct RlArgs {
  PolicyArgs policy;
  std::string out, trajectory;
  int steps = 100;
};

// Property oracles in the reward config may be given as file paths.
RewardConfig load_reward(const Config& cfg) {
  json r = cfg.raw().value("reward", json::object());
  if (r.contains("properties")) {
    for (auto& p : r["properties"]) {
      if (p.contains("oracle") && p["oracle"].is_string()) p["oracle"] = load_json(p["oracle"].get<std::string>());
    }
  }
  try {
    return reward_config_from_json(r);
  } catch (const json::exception& e) {
    throw DataError(std::string("reward config: ") + e.what());
  }
}

void run_rl_train(const RlArgs& a, const Config& cfg, std::uint64_t seed) {
  RewardConfig reward = load_reward(cfg);
  PolicySetup s = setup_policy(a.policy, true);
  if (reward.scaffold && (!s.vocab || !s.vocab->find_token(*reward.scaffold))) {
    throw DataError("scaffold token " + *reward.scaffold + " is not in the vocabulary");
  }
  std::vector<MolGraph> graphs = graphs_of(s.train);
  TrainingSet train = TrainingSet::from_graphs(graphs);
  SaModel sa = SaModel::fit(graphs);
  RewardContext ctx{&train, &sa, s.vocab ? &*s.vocab : nullptr};
  SampleDecoder decoder(s.format, ctx.vocab);

  std::string lines;
  RlResult result = rl_train(s.policy, reward, a.steps, seed, ctx, decoder, [&](const TrajectoryStep& step) {
    lines += to_json(step).dump() + "\n";
  });
  atomic_write(a.trajectory, lines);
  write_json(a.out, policy_to_json(result.policy));
}

struct EvaluateArgs {
  std::string samples, format = "happy", vocab, train, scaffold, out;
};

void run_evaluate(const EvaluateArgs& a) {
  SampleFormat format = parse_format(a.format);
  std::optional<Vocabulary> vocab;
  if (!a.vocab.empty()) vocab = load_vocab(a.vocab);
  if ((format == SampleFormat::kHappy || !a.scaffold.empty()) && !vocab) {
    throw UsageError("--vocab is required for happy samples and scaffold checks");
  }
  std::vector<std::string> samples = read_lines(a.samples);
  GenerationBatch batch = make_batch(samples, format, vocab ? &*vocab : nullptr);

  std::vector<MolGraph> graphs;
  if (!a.train.empty()) graphs = graphs_of(load_records(a.train).records);
  TrainingSet train = TrainingSet::from_graphs(graphs);
  SaModel sa = SaModel::fit(graphs);
  EvaluationContext ctx;
  if (!graphs.empty()) {
    ctx.train = &train;
    ctx.sa = &sa;
  }
  ctx.vocab = vocab ? &*vocab : nullptr;
  if (!a.scaffold.empty()) ctx.scaffold_token = a.scaffold;
  json report = to_json(evaluate_batch(batch, ctx));
  report["samples"] = batch.size();
  emit(a.out, report.dump(2) + "\n");
}

struct AttributeArgs {
  std::string oracle, vocab, input, out;
  int steps = 200;
};

void run_attribute(const AttributeArgs& a) {
  PropertyOracle oracle = oracle_from_json(load_json(a.oracle));
  Vocabulary vocab = load_vocab(a.vocab);
  IngestResult r = load_records(a.input);
  std::string text;
  for (const auto& rec : r.records) {
    TiledMonomer m;
    try {
      m = tile_view(tile_with_vocabulary(parse_smiles(rec.canonical), vocab));
    } catch (const TilingError& e) {
      throw DataError(rec.canonical + ": " + e.what());
    }
    AttributionReport rep = attribute_monomer(oracle, m, vocab, a.steps);
    if (!std::isfinite(rep.completeness_gap) || rep.completeness_gap > 1e-6 * std::max(1.0, std::abs(rep.model_delta))) {
      throw InvariantError("attribution completeness gap " + fmt(rep.completeness_gap) + " for " + rec.canonical);
    }
    json line = to_json(rep);
    line["smiles"] = rec.canonical;
    text += line.dump() + "\n";
  }
  emit(a.out, text);
}

int run(int argc, char** argv) {
  Config cfg;
  if (auto path = scan_config(argc, argv)) cfg = Config(load_json(*path));

  CLI::App app{"Polymer HAPPY encoding, property oracles and RL design"};
  app.require_subcommand(1);
  std::string top_config;
  app.add_option("--config", top_config, "JSON config (schema_version 1)");
  Common common;

  IngestArgs ingest;
  CLI::App* c_ingest = app.add_subcommand("ingest", "Validate and canonicalize a CSV dataset");
  add_common(c_ingest, cfg, common);
  bind_opt(c_ingest, cfg, "--input", ingest.input, "Dataset CSV with a smiles column", true);
  bind_opt(c_ingest, cfg, "--out", ingest.out, "Canonical records CSV", true);
  bind_opt(c_ingest, cfg, "--rejects", ingest.rejects, "Rejected rows CSV");
  bind_opt(c_ingest, cfg, "--splits", ingest.splits, "Fold assignment JSON");
  bind_opt(c_ingest, cfg, "--folds", ingest.folds, "Folds per repeat")->check(CLI::PositiveNumber);
  bind_opt(c_ingest, cfg, "--repeats", ingest.repeats, "Split repeats")->check(CLI::PositiveNumber);

  ForgeArgs forge;
  CLI::App* c_forge = app.add_subcommand("forge", "Mine a subgroup vocabulary");
  add_common(c_forge, cfg, common);
  bind_opt(c_forge, cfg, "--input", forge.input, "Dataset CSV", true);
  bind_opt(c_forge, cfg, "--out", forge.out, "Vocabulary JSON", true);
  bind_opt(c_forge, cfg, "--threshold", forge.threshold, "Promotion needs more occurrences than this")
      ->check(CLI::NonNegativeNumber);
  bind_opt(c_forge, cfg, "--max-iterations", forge.max_iterations, "Iteration cap")->check(CLI::PositiveNumber);

  CodecArgs enc;
  CLI::App* c_encode = app.add_subcommand("encode", "Write one HAPPY string per record");
  add_common(c_encode, cfg, common);
  bind_opt(c_encode, cfg, "--vocab", enc.vocab, "Vocabulary JSON", true);
  bind_opt(c_encode, cfg, "--input", enc.input, "Dataset CSV", true);
  bind_opt(c_encode, cfg, "--out", enc.out, "Output file (stdout if absent)");

  CodecArgs dec;
  CLI::App* c_decode = app.add_subcommand("decode", "Decode HAPPY lines to a SMILES CSV");
  add_common(c_decode, cfg, common);
  bind_opt(c_decode, cfg, "--vocab", dec.vocab, "Vocabulary JSON", true);
  bind_opt(c_decode, cfg, "--input", dec.input, "HAPPY strings, one per line", true);
  bind_opt(c_decode, cfg, "--out", dec.out, "Output CSV (stdout if absent)");

  StatsArgs stats;
  CLI::App* c_stats = app.add_subcommand("stats", "Sequence length report for HAPPY and SMILES");
  add_common(c_stats, cfg, common);
  bind_opt(c_stats, cfg, "--vocab", stats.vocab, "Vocabulary JSON", true);
  bind_opt(c_stats, cfg, "--input", stats.input, "Dataset CSV", true);
  bind_opt(c_stats, cfg, "--out", stats.out, "Report JSON (stdout if absent)");

  TrainOracleArgs to;
  CLI::App* c_train = app.add_subcommand("train-oracle", "Fit a ridge property oracle");
  add_common(c_train, cfg, common);
  bind_opt(c_train, cfg, "--input", to.input, "Dataset CSV", true);
  bind_opt(c_train, cfg, "--property", to.property, "Property column", true);
  bind_opt(c_train, cfg, "--out", to.out, "Oracle JSON", true);
  bind_opt(c_train, cfg, "--report", to.report, "Cross-validation report (stdout if absent)");
  bind_opt(c_train, cfg, "--k", to.k, "Selected descriptors")->check(CLI::PositiveNumber);
  bind_opt(c_train, cfg, "--lambda", to.lambda, "Ridge penalty")->check(CLI::NonNegativeNumber);
  bind_opt(c_train, cfg, "--folds", to.folds, "Cross-validation folds (below 2 disables)");

  PredictArgs pred;
  CLI::App* c_predict = app.add_subcommand("predict", "Predict a property with a fitted oracle");
  add_common(c_predict, cfg, common);
  bind_opt(c_predict, cfg, "--oracle", pred.oracle, "Oracle JSON", true);
  bind_opt(c_predict, cfg, "--input", pred.input, "Dataset CSV", true);
  bind_opt(c_predict, cfg, "--out", pred.out, "Predictions CSV (stdout if absent)");

  GenerateArgs gen;
  CLI::App* c_generate = app.add_subcommand("generate", "Sample sequences from a policy");
  add_common(c_generate, cfg, common);
  bind_policy(c_generate, cfg, gen.policy);
  bind_opt(c_generate, cfg, "--n", gen.n, "Number of samples")->check(CLI::NonNegativeNumber);
  bind_opt(c_generate, cfg, "--max-len", gen.max_len, "Token cap per sample")->check(CLI::PositiveNumber);
  bind_opt(c_generate, cfg, "--out", gen.out, "Samples, one per line (stdout if absent)");

  RlArgs rl;
  CLI::App* c_rl = app.add_subcommand("rl-train", "REINFORCE fine-tuning against the configured reward");
  add_common(c_rl, cfg, common);
  bind_policy(c_rl, cfg, rl.policy);
  bind_opt(c_rl, cfg, "--steps", rl.steps, "Policy updates")->check(CLI::NonNegativeNumber);
  bind_opt(c_rl, cfg, "--out", rl.out, "Final policy JSON", true);
  bind_opt(c_rl, cfg, "--trajectory", rl.trajectory, "Per-step metrics, JSON lines", true);

  EvaluateArgs ev;
  CLI::App* c_eval = app.add_subcommand("evaluate", "Generation metrics for a sample file");
  add_common(c_eval, cfg, common);
  bind_opt(c_eval, cfg, "--samples", ev.samples, "Samples, one per line", true);
  bind_opt(c_eval, cfg, "--format", ev.format, "happy or smiles");
  bind_opt(c_eval, cfg, "--vocab", ev.vocab, "Vocabulary JSON");
  bind_opt(c_eval, cfg, "--train", ev.train, "Training CSV for novelty, similarity, specificity and SA");
  bind_opt(c_eval, cfg, "--scaffold", ev.scaffold, "Scaffold vocabulary token");
  bind_opt(c_eval, cfg, "--out", ev.out, "Metrics JSON (stdout if absent)");

  AttributeArgs at;
  CLI::App* c_attr = app.add_subcommand("attribute", "Integrated-gradient attributions per subgroup");
  add_common(c_attr, cfg, common);
  bind_opt(c_attr, cfg, "--oracle", at.oracle, "Oracle JSON", true);
  bind_opt(c_attr, cfg, "--vocab", at.vocab, "Vocabulary JSON", true);
  bind_opt(c_attr, cfg, "--input", at.input, "Dataset CSV", true);
  bind_opt(c_attr, cfg, "--steps", at.steps, "Path integration points")->check(CLI::PositiveNumber);
  bind_opt(c_attr, cfg, "--out", at.out, "Reports, JSON lines (stdout if absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::uint64_t seed = common.seed;
  if (c_ingest->parsed()) run_ingest(ingest, seed);
  if (c_forge->parsed()) run_forge(forge);
  if (c_encode->parsed()) run_encode(enc);
  if (c_decode->parsed()) run_decode(dec);
  if (c_stats->parsed()) run_stats(stats);
  if (c_train->parsed()) run_train_oracle(to, seed);
  if (c_predict->parsed()) run_predict(pred);
  if (c_generate->parsed()) run_generate(gen, seed);
  if (c_rl->parsed()) run_rl_train(rl, cfg, seed);
  if (c_eval->parsed()) run_evaluate(ev);
  if (c_attr->parsed()) run_attribute(at);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return 3;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const DatasetError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    // Library errors (tiling, HAPPY, oracle, metric, stats) stem from inputs.
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
