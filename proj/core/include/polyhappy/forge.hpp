#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyhappy/fragment.hpp"
#include "polyhappy/molgraph.hpp"

namespace polyhappy {

class TilingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MiningConfig {
  long threshold = 100;  // promotion needs strictly more occurrences
  int max_iterations = 50;
};

struct VocabularyEntry {
  std::string token;
  std::string key;
  int atom_count = 0;
  int iteration = 0;
  long frequency = 0;
  // Derived from the key, not serialized.
  int fragment_count = 1;
  int port_count = 0;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<VocabularyEntry> entries, long threshold, std::string corpus_hash);

  const std::vector<VocabularyEntry>& entries() const { return entries_; }
  long threshold() const { return threshold_; }
  const std::string& corpus_hash() const { return corpus_hash_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const VocabularyEntry& entry(int i) const { return entries_[static_cast<std::size_t>(i)]; }

  std::optional<int> find_key(const std::string& key) const;
  std::optional<int> find_token(const std::string& token) const;
  // Parsed fragment for entry i (cached).
  const Fragment& fragment(int i) const;
  int max_fragment_count() const;

 private:
  std::vector<VocabularyEntry> entries_;
  long threshold_ = 0;
  std::string corpus_hash_;
  std::unordered_map<std::string, int> by_key_;
  std::unordered_map<std::string, int> by_token_;
  mutable std::unordered_map<int, Fragment> fragments_;
};

nlohmann::json vocabulary_to_json(const Vocabulary& v);
Vocabulary vocabulary_from_json(const nlohmann::json& j);

// A connected group of initial fragments covered by one vocabulary entry.
// `children` records the two tiles merged to form it.
struct Tile {
  int entry = -1;
  std::vector<int> fragments;  // ascending
  std::vector<Tile> children;
};

struct MonomerTiling {
  FragmentTree tree;
  std::vector<Tile> tiles;
};

// Shape of a fragment group as a standalone subgroup.
struct TileShape {
  std::string key;
  int port_count = 0;
  int atom_count = 0;
};

struct TileBuild {
  Fragment fragment;
  // (fragment, fragment port) -> port id on the built tile
  std::map<PortRef, int> port_map;
  int atom_count = 0;
};

TileBuild build_tile(const FragmentTree& tree, std::span<const int> fragments);

// Memoizes TileShape per fragment set, per monomer.
class ShapeCache {
 public:
  const TileShape& shape(std::size_t monomer, const FragmentTree& tree,
                         const std::vector<int>& fragments);

 private:
  std::vector<std::map<std::vector<int>, TileShape>> cache_;
};

// Tile-level view of a monomer: units, their port links and the two ends.
struct TiledMonomer {
  std::vector<Fragment> units;
  std::vector<int> entries;  // vocabulary index per unit
  std::vector<TreeLink> links;
  std::array<PortRef, 2> ends;
};

TiledMonomer tile_view(const MonomerTiling& tiling);

struct CandidateStats {
  long count = 0;
  int atom_count = 0;
  int port_count = 0;
};

// Adjacent tile pairs across the corpus, keyed by merged canonical key.
// Merges exposing more than two external ports are dropped.
std::map<std::string, CandidateStats> enumerate_candidates(std::span<const MonomerTiling> tilings,
                                                           ShapeCache* cache = nullptr);

struct MinedEntry {
  std::string key;
  int iteration = 0;
  int atom_count = 0;
  bool live = true;
  bool retired = false;  // pruned once; never promoted again
};

struct PromotedCandidate {
  int entry = 0;
  int iteration = 0;
  int atom_count = 0;
};

// Greedily merges adjacent tile pairs whose union is a promoted key, in
// priority order: later iteration, more atoms, smaller key, earlier position.
void resolve_overlaps(std::size_t monomer, MonomerTiling& tiling,
                      const std::map<std::string, PromotedCandidate>& promoted, ShapeCache& cache);

struct ForgeState {
  std::vector<MonomerTiling> tilings;
  std::vector<MinedEntry> entries;
  std::map<std::string, int> by_key;
  int iteration = 0;
  ShapeCache cache;

  int entry_for(const std::string& key, int iteration, int atom_count);
};

ForgeState initial_forge_state(std::span<const MolGraph> corpus);

// One discover-merge-promote-rewrite-prune cycle. Returns whether any
// promotion or pruning happened.
bool forge_step(ForgeState& state, const MiningConfig& config);

// Non-retired candidates above threshold; empty at a fixpoint.
std::map<std::string, CandidateStats> fixpoint_violations(ForgeState& state, const MiningConfig& config);

struct ForgeResult {
  Vocabulary vocabulary;
  std::vector<MonomerTiling> tilings;  // Tile::entry indexes the vocabulary
  int iterations = 0;
  bool converged = false;
};

ForgeResult finalize_forge(const ForgeState& state, const MiningConfig& config,
                           std::span<const MolGraph> corpus, int iterations, bool converged);

ForgeResult forge_run(std::span<const MolGraph> corpus, const MiningConfig& config);

// Tiles a monomer against an existing vocabulary by greedy matching of
// connected fragment groups. Throws TilingError naming an uncovered key.
MonomerTiling tile_with_vocabulary(const MolGraph& g, const Vocabulary& vocab);

std::string corpus_hash(std::span<const MolGraph> corpus);

}  // namespace polyhappy
