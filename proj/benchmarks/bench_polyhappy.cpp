#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "polyhappy/chemfeat.hpp"
#include "polyhappy/dataset.hpp"
#include "polyhappy/design.hpp"
#include "polyhappy/forge.hpp"
#include "polyhappy/happy.hpp"
#include "polyhappy/metrics.hpp"
#include "polyhappy/molgraph.hpp"

namespace {

using namespace polyhappy;

const std::vector<DatasetRecord>& records() {
  static const std::vector<DatasetRecord> r = ingest_file(POLYHAPPY_DATA_DIR "/polymers.csv").records;
  return r;
}

const std::vector<MolGraph>& corpus() {
  static const std::vector<MolGraph> g = [] {
    std::vector<MolGraph> out;
    for (const auto& r : records()) out.push_back(parse_smiles(r.canonical));
    return out;
  }();
  return g;
}

const Vocabulary& vocab() {
  static const Vocabulary v = forge_run(corpus(), MiningConfig{3, 50}).vocabulary;
  return v;
}

void BM_ParseCanonicalize(benchmark::State& state) {
  for (auto _ : state) {
    for (const auto& r : records()) benchmark::DoNotOptimize(write_smiles(parse_smiles(r.smiles)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(records().size()));
}
BENCHMARK(BM_ParseCanonicalize);

void BM_Fingerprint(benchmark::State& state) {
  for (auto _ : state) {
    for (const auto& g : corpus()) benchmark::DoNotOptimize(morgan_fingerprint(g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(corpus().size()));
}
BENCHMARK(BM_Fingerprint);

void BM_Descriptors(benchmark::State& state) {
  for (auto _ : state) {
    for (const auto& g : corpus()) benchmark::DoNotOptimize(compute_descriptors(g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(corpus().size()));
}
BENCHMARK(BM_Descriptors);

void BM_Forge(benchmark::State& state) {
  MiningConfig cfg{state.range(0), 50};
  for (auto _ : state) benchmark::DoNotOptimize(forge_run(corpus(), cfg));
}
BENCHMARK(BM_Forge)->Arg(3)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EncodeDecode(benchmark::State& state) {
  const Vocabulary& v = vocab();
  for (auto _ : state) {
    for (const auto& g : corpus()) benchmark::DoNotOptimize(decode(encode(g, v), v));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(corpus().size()));
}
BENCHMARK(BM_EncodeDecode)->Unit(benchmark::kMillisecond);

void BM_SampleAndScore(benchmark::State& state) {
  const Vocabulary& v = vocab();
  std::vector<std::vector<std::string>> seqs;
  for (const auto& g : corpus()) seqs.push_back(flatten(encode(g, v)));
  Policy p = Policy::fit(seqs, 3);
  TrainingSet train = TrainingSet::from_graphs(corpus());
  SaModel sa = SaModel::fit(corpus());
  RewardConfig cfg;
  cfg.batch_size = static_cast<int>(state.range(0));
  RewardContext ctx{&train, &sa, &v};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    SampleDecoder decoder(SampleFormat::kHappy, &v);
    SampledBatch b = sample_batch(p, cfg.batch_size, cfg.max_len, seed++, decoder);
    benchmark::DoNotOptimize(compute_rewards(b.batch, cfg, ctx));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleAndScore)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
