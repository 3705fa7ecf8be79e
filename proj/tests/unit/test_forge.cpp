#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "polyhappy/forge.hpp"
#include "test_support.hpp"

namespace polyhappy {
namespace {

using testing::corpus_graphs;

std::vector<MolGraph> copies(const std::string& smiles, int n) {
  return std::vector<MolGraph>(static_cast<std::size_t>(n), parse_smiles(smiles));
}

std::vector<std::string> keys_of(const Vocabulary& v) {
  std::vector<std::string> out;
  for (const auto& e : v.entries()) out.push_back(e.key);
  std::sort(out.begin(), out.end());
  return out;
}

const VocabularyEntry& entry_with_key(const Vocabulary& v, const std::string& key) {
  auto i = v.find_key(key);
  if (!i) throw std::runtime_error("missing key " + key);
  return v.entry(*i);
}

std::size_t tile_count(const MonomerTiling& t) { return t.tiles.size(); }

TEST(EnumerateCandidates, CopiesCountOncePerOccurrence) {
  auto corpus = copies("*CC(*)c1ccccc1", 7);
  ForgeState s = initial_forge_state(corpus);
  auto c = enumerate_candidates(s.tilings, &s.cache);
  // CH2-CH would expose three ports and is dropped.
  ASSERT_EQ(c.size(), 1U);
  EXPECT_EQ(c.begin()->first, "[1*]C([2*])c1ccccc1");
  EXPECT_EQ(c.begin()->second.count, 7);
  EXPECT_EQ(c.begin()->second.port_count, 2);
  EXPECT_EQ(c.begin()->second.atom_count, 7);
}

TEST(EnumerateCandidates, ChainCountsEveryAdjacentPair) {
  auto corpus = copies("*OCC*", 1);
  ForgeState s = initial_forge_state(corpus);
  auto c = enumerate_candidates(s.tilings, &s.cache);
  ASSERT_EQ(c.size(), 2U);
  EXPECT_TRUE(c.contains("[1*]CC[2*]"));
  for (const auto& [k, stats] : c) EXPECT_EQ(stats.count, 1);
}

TEST(EnumerateCandidates, RepeatsWithinOneMonomerAllCount) {
  auto corpus = copies("*OCCOCCOCC*", 1);
  ForgeState s = initial_forge_state(corpus);
  auto c = enumerate_candidates(s.tilings, &s.cache);
  EXPECT_EQ(c.at("[1*]CC[2*]").count, 3);
}

TEST(ForgeStep, CountEqualToThresholdIsNotPromoted) {
  auto corpus = copies("*CC(*)c1ccccc1", 100);
  ForgeResult r = forge_run(corpus, MiningConfig{100, 50});
  EXPECT_EQ(r.vocabulary.size(), 3);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
}

TEST(ForgeStep, CountAboveThresholdIsPromoted) {
  auto corpus = copies("*CC(*)c1ccccc1", 101);
  ForgeState s = initial_forge_state(corpus);
  ASSERT_TRUE(forge_step(s, MiningConfig{100, 50}));
  ASSERT_EQ(s.tilings[0].tiles.size(), 2U);  // CH2 and the CH-phenyl tile
  ForgeResult r = forge_run(corpus, MiningConfig{100, 50});
  EXPECT_TRUE(r.vocabulary.find_key("[1*]CC([2*])c1ccccc1"));
}

TEST(ForgeRun, HandTracedStyreneVocabulary) {
  // Iteration 1: CH-phenyl (5 > 3) promotes; CH2-CH is excluded (3 ports).
  // Iteration 2: CH2 + CH-phenyl (5 > 3) promotes, leaving CH-phenyl with
  // frequency 0, so it is pruned. Iteration 3 finds nothing.
  auto corpus = copies("*CC(*)c1ccccc1", 5);
  ForgeResult r = forge_run(corpus, MiningConfig{3, 50});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_EQ(keys_of(r.vocabulary),
            (std::vector<std::string>{"[1*]C([2*])[3*]", "[1*]CC([2*])c1ccccc1", "[1*]C[2*]", "[1*]c1ccccc1"}));
  const auto& whole = entry_with_key(r.vocabulary, "[1*]CC([2*])c1ccccc1");
  EXPECT_EQ(whole.iteration, 2);
  EXPECT_EQ(whole.frequency, 5);
  EXPECT_EQ(whole.atom_count, 8);
  for (const char* k : {"[1*]C([2*])[3*]", "[1*]C[2*]", "[1*]c1ccccc1"}) {
    EXPECT_EQ(entry_with_key(r.vocabulary, k).iteration, 0);
    EXPECT_EQ(entry_with_key(r.vocabulary, k).frequency, 0);
  }
  for (const auto& t : r.tilings) EXPECT_EQ(tile_count(t), 1U);
}

TEST(ForgeRun, EntryBelowThresholdIsPruned) {
  // CH-phenyl promotes with 6 occurrences, then the styrene merge consumes
  // four of them: 2 = threshold - 1 remain.
  auto corpus = copies("*CC(*)c1ccccc1", 4);
  for (int i = 0; i < 2; ++i) corpus.push_back(parse_smiles("*C(*)c1ccccc1"));
  ForgeResult r = forge_run(corpus, MiningConfig{3, 50});
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.vocabulary.find_key("[1*]C([2*])c1ccccc1"));
  EXPECT_TRUE(r.vocabulary.find_key("[1*]CC([2*])c1ccccc1"));
  EXPECT_EQ(tile_count(r.tilings[4]), 2U);
}

TEST(ForgeRun, EntryAtThresholdSurvives) {
  auto corpus = copies("*CC(*)c1ccccc1", 4);
  for (int i = 0; i < 3; ++i) corpus.push_back(parse_smiles("*C(*)c1ccccc1"));
  ForgeResult r = forge_run(corpus, MiningConfig{3, 50});
  ASSERT_TRUE(r.vocabulary.find_key("[1*]C([2*])c1ccccc1"));
  EXPECT_EQ(entry_with_key(r.vocabulary, "[1*]C([2*])c1ccccc1").frequency, 3);
}

TEST(ForgeRun, ThresholdAboveCorpusSizeKeepsInitialFragments) {
  auto corpus = corpus_graphs();
  ForgeResult r = forge_run(corpus, MiningConfig{static_cast<long>(corpus.size()) * 100, 50});
  EXPECT_EQ(r.iterations, 1);
  for (const auto& e : r.vocabulary.entries()) EXPECT_EQ(e.iteration, 0);
}

TEST(ForgeRun, EmptyCorpusIsAnError) {
  std::vector<MolGraph> none;
  EXPECT_THROW(forge_run(none, MiningConfig{}), TilingError);
}

TEST(ForgeRun, ConvergedStateIsAFixpoint) {
  auto corpus = corpus_graphs();
  MiningConfig cfg{5, 50};
  ForgeState s = initial_forge_state(corpus);
  int iterations = 0;
  while (forge_step(s, cfg)) ++iterations;
  EXPECT_TRUE(fixpoint_violations(s, cfg).empty());
  std::vector<MinedEntry> before = s.entries;
  EXPECT_FALSE(forge_step(s, cfg));
  ASSERT_EQ(s.entries.size(), before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(s.entries[i].key, before[i].key);
    EXPECT_EQ(s.entries[i].live, before[i].live);
  }
}

TEST(ForgeRun, DeterministicAndConserving) {
  auto corpus = corpus_graphs();
  MiningConfig cfg{5, 50};
  ForgeResult a = forge_run(corpus, cfg);
  ForgeResult b = forge_run(corpus, cfg);
  EXPECT_EQ(vocabulary_to_json(a.vocabulary), vocabulary_to_json(b.vocabulary));
  ASSERT_TRUE(a.converged);
  for (std::size_t m = 0; m < corpus.size(); ++m) {
    const MonomerTiling& t = a.tilings[m];
    std::vector<int> covered;
    for (const Tile& tile : t.tiles) covered.insert(covered.end(), tile.fragments.begin(), tile.fragments.end());
    std::sort(covered.begin(), covered.end());
    std::vector<int> all(t.tree.fragments.size());
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(covered, all);
    EXPECT_TRUE(graph_isomorphic(reassemble(t.tree), corpus[m]));
  }
}

TEST(ForgeRun, LaterEntriesHaveAtMostTwoPorts) {
  ForgeResult r = forge_run(corpus_graphs(), MiningConfig{5, 50});
  for (const auto& e : r.vocabulary.entries()) {
    if (e.iteration >= 1) {
      EXPECT_LE(e.port_count, 2) << e.key;
    }
  }
}

TEST(ResolveOverlaps, LaterIterationWins) {
  auto corpus = copies("*OCC*", 1);
  ForgeState s = initial_forge_state(corpus);
  auto c = enumerate_candidates(s.tilings, &s.cache);
  std::map<std::string, PromotedCandidate> promoted;
  for (const auto& [k, stats] : c) {
    bool cc = k == "[1*]CC[2*]";
    promoted[k] = PromotedCandidate{cc ? 10 : 11, cc ? 2 : 1, stats.atom_count};
  }
  resolve_overlaps(0, s.tilings[0], promoted, s.cache);
  ASSERT_EQ(s.tilings[0].tiles.size(), 2U);
  int merged = 0;
  for (const Tile& t : s.tilings[0].tiles) {
    if (t.fragments.size() == 2) {
      EXPECT_EQ(t.entry, 10);
      ++merged;
    }
  }
  EXPECT_EQ(merged, 1);
}

TEST(ResolveOverlaps, MoreAtomsWinWithinAnIteration) {
  auto corpus = copies("*OCC(=O)*", 1);
  ForgeState s = initial_forge_state(corpus);
  auto c = enumerate_candidates(s.tilings, &s.cache);
  ASSERT_EQ(c.size(), 2U);
  std::map<std::string, PromotedCandidate> promoted;
  std::map<int, int> atoms_by_entry;
  int id = 20;
  for (const auto& [k, stats] : c) {
    atoms_by_entry[id] = stats.atom_count;
    promoted[k] = PromotedCandidate{id++, 1, stats.atom_count};
  }
  resolve_overlaps(0, s.tilings[0], promoted, s.cache);
  ASSERT_EQ(s.tilings[0].tiles.size(), 2U);
  for (const Tile& t : s.tilings[0].tiles) {
    if (t.fragments.size() == 2) {
      EXPECT_EQ(atoms_by_entry.at(t.entry), 3);
    }
  }
}

TEST(ResolveOverlaps, DisjointMatchesBothApply) {
  auto corpus = copies("*OCCCO*", 1);
  ForgeState s = initial_forge_state(corpus);
  auto c = enumerate_candidates(s.tilings, &s.cache);
  std::map<std::string, PromotedCandidate> promoted;
  for (const auto& [k, stats] : c) {
    if (k != "[1*]CC[2*]") promoted[k] = PromotedCandidate{30, 1, stats.atom_count};
  }
  ASSERT_EQ(promoted.size(), 1U);
  resolve_overlaps(0, s.tilings[0], promoted, s.cache);
  EXPECT_EQ(s.tilings[0].tiles.size(), 3U);
}

TEST(TileWithVocabulary, UncoveredFragmentNamesKey) {
  ForgeResult r = forge_run(copies("*CC(*)c1ccccc1", 2), MiningConfig{100, 50});
  try {
    tile_with_vocabulary(parse_smiles("*CC(*)C(=O)OC"), r.vocabulary);
    FAIL() << "expected TilingError";
  } catch (const TilingError& e) {
    EXPECT_NE(std::string(e.what()).find("[1*]"), std::string::npos);
  }
}

TEST(VocabularyJson, RoundTrips) {
  ForgeResult r = forge_run(corpus_graphs(), MiningConfig{5, 50});
  nlohmann::json j = vocabulary_to_json(r.vocabulary);
  EXPECT_EQ(j.at("schema_version"), 1);
  Vocabulary back = vocabulary_from_json(j);
  EXPECT_EQ(vocabulary_to_json(back), j);
  EXPECT_EQ(back.corpus_hash(), corpus_hash(corpus_graphs()));
}

}  // namespace
}  // namespace polyhappy
