#include "polyhappy/forge.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

#include "polyhappy/hash.hpp"

namespace polyhappy {

// ---------------------------------------------------------------------------
// Vocabulary

namespace {

void derive_counts(VocabularyEntry& e) {
  MolGraph g = parse_smiles(e.key);
  e.port_count = g.wildcard_count();
  e.fragment_count = static_cast<int>(cuttable_bonds(g).size()) + 1;
  if (e.atom_count == 0) e.atom_count = g.heavy_atom_count();
}

}  // namespace

Vocabulary::Vocabulary(std::vector<VocabularyEntry> entries, long threshold, std::string corpus_hash)
    : entries_(std::move(entries)), threshold_(threshold), corpus_hash_(std::move(corpus_hash)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    VocabularyEntry& e = entries_[i];
    derive_counts(e);
    if (!by_key_.emplace(e.key, static_cast<int>(i)).second) {
      throw TilingError("duplicate vocabulary key " + e.key);
    }
    if (!by_token_.emplace(e.token, static_cast<int>(i)).second) {
      throw TilingError("duplicate vocabulary token " + e.token);
    }
  }
}

std::optional<int> Vocabulary::find_key(const std::string& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Vocabulary::find_token(const std::string& token) const {
  auto it = by_token_.find(token);
  if (it == by_token_.end()) return std::nullopt;
  return it->second;
}

const Fragment& Vocabulary::fragment(int i) const {
  auto it = fragments_.find(i);
  if (it == fragments_.end()) it = fragments_.emplace(i, fragment_from_key(entry(i).key)).first;
  return it->second;
}

int Vocabulary::max_fragment_count() const {
  int best = 1;
  for (const VocabularyEntry& e : entries_) best = std::max(best, e.fragment_count);
  return best;
}

nlohmann::json vocabulary_to_json(const Vocabulary& v) {
  nlohmann::json entries = nlohmann::json::array();
  for (const VocabularyEntry& e : v.entries()) {
    entries.push_back({{"token", e.token},
                       {"key", e.key},
                       {"atom_count", e.atom_count},
                       {"iteration", e.iteration},
                       {"frequency", e.frequency}});
  }
  return {{"schema_version", 1},
          {"threshold", v.threshold()},
          {"corpus_hash", v.corpus_hash()},
          {"entries", std::move(entries)}};
}

Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  std::vector<VocabularyEntry> entries;
  for (const auto& e : j.at("entries")) {
    VocabularyEntry v;
    v.token = e.at("token").get<std::string>();
    v.key = e.at("key").get<std::string>();
    v.atom_count = e.at("atom_count").get<int>();
    v.iteration = e.at("iteration").get<int>();
    v.frequency = e.at("frequency").get<long>();
    entries.push_back(std::move(v));
  }
  return Vocabulary(std::move(entries), j.at("threshold").get<long>(),
                    j.value("corpus_hash", std::string()));
}

// ---------------------------------------------------------------------------
// Tiles

TileBuild build_tile(const FragmentTree& tree, std::span<const int> fragments) {
  std::vector<bool> in_set(tree.fragments.size(), false);
  for (int f : fragments) in_set[static_cast<std::size_t>(f)] = true;
  std::map<PortRef, PortRef> partner;
  for (const TreeLink& l : tree.edges) {
    partner[l.a] = l.b;
    partner[l.b] = l.a;
  }
  std::vector<int> atoms;
  std::vector<int> sites;
  std::vector<PortRef> site_refs;
  for (int f : fragments) {
    const auto& local = tree.fragment_atoms[static_cast<std::size_t>(f)];
    atoms.insert(atoms.end(), local.begin(), local.end());
    for (const Port& p : tree.fragments[static_cast<std::size_t>(f)].ports) {
      PortRef ref{f, p.id};
      auto it = partner.find(ref);
      if (it != partner.end() && in_set[static_cast<std::size_t>(it->second.node)]) continue;
      sites.push_back(local[static_cast<std::size_t>(p.atom)]);
      site_refs.push_back(ref);
    }
  }
  std::sort(atoms.begin(), atoms.end());
  BuiltFragment built = build_fragment(tree.source, atoms, sites);
  TileBuild out;
  for (std::size_t i = 0; i < site_refs.size(); ++i) out.port_map[site_refs[i]] = built.site_ports[i];
  out.atom_count = built.fragment.graph.heavy_atom_count();
  out.fragment = std::move(built.fragment);
  return out;
}

const TileShape& ShapeCache::shape(std::size_t monomer, const FragmentTree& tree,
                                   const std::vector<int>& fragments) {
  if (cache_.size() <= monomer) cache_.resize(monomer + 1);
  auto& m = cache_[monomer];
  auto it = m.find(fragments);
  if (it != m.end()) return it->second;
  TileBuild b = build_tile(tree, fragments);
  TileShape s{b.fragment.key, b.fragment.port_count(), b.atom_count};
  return m.emplace(fragments, std::move(s)).first->second;
}

namespace {

std::vector<int> tile_index(const MonomerTiling& t) {
  std::vector<int> out(t.tree.fragments.size(), -1);
  for (std::size_t i = 0; i < t.tiles.size(); ++i) {
    for (int f : t.tiles[i].fragments) out[static_cast<std::size_t>(f)] = static_cast<int>(i);
  }
  return out;
}

std::vector<int> merged(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void sort_tiles(std::vector<Tile>& tiles) {
  std::sort(tiles.begin(), tiles.end(),
            [](const Tile& a, const Tile& b) { return a.fragments.front() < b.fragments.front(); });
}

}  // namespace

TiledMonomer tile_view(const MonomerTiling& tiling) {
  TiledMonomer out;
  std::vector<int> tile_of = tile_index(tiling);
  std::map<PortRef, PortRef> to_unit;
  for (std::size_t i = 0; i < tiling.tiles.size(); ++i) {
    TileBuild b = build_tile(tiling.tree, tiling.tiles[i].fragments);
    for (const auto& [ref, id] : b.port_map) to_unit[ref] = PortRef{static_cast<int>(i), id};
    out.units.push_back(std::move(b.fragment));
    out.entries.push_back(tiling.tiles[i].entry);
  }
  for (const TreeLink& l : tiling.tree.edges) {
    if (tile_of[static_cast<std::size_t>(l.a.node)] == tile_of[static_cast<std::size_t>(l.b.node)]) continue;
    out.links.push_back(TreeLink{to_unit.at(l.a), to_unit.at(l.b)});
  }
  for (std::size_t e = 0; e < 2; ++e) out.ends[e] = to_unit.at(tiling.tree.ends[e]);
  return out;
}

// ---------------------------------------------------------------------------
// Mining

std::map<std::string, CandidateStats> enumerate_candidates(std::span<const MonomerTiling> tilings,
                                                           ShapeCache* cache) {
  ShapeCache local;
  ShapeCache& shapes = cache ? *cache : local;
  std::map<std::string, CandidateStats> out;
  for (std::size_t m = 0; m < tilings.size(); ++m) {
    const MonomerTiling& t = tilings[m];
    std::vector<int> tile_of = tile_index(t);
    for (const TreeLink& l : t.tree.edges) {
      int x = tile_of[static_cast<std::size_t>(l.a.node)];
      int y = tile_of[static_cast<std::size_t>(l.b.node)];
      if (x == y) continue;
      std::vector<int> frags = merged(t.tiles[static_cast<std::size_t>(x)].fragments,
                                      t.tiles[static_cast<std::size_t>(y)].fragments);
      const TileShape& s = shapes.shape(m, t.tree, frags);
      if (s.port_count > 2) continue;
      CandidateStats& c = out[s.key];
      ++c.count;
      c.atom_count = s.atom_count;
      c.port_count = s.port_count;
    }
  }
  return out;
}

void resolve_overlaps(std::size_t monomer, MonomerTiling& tiling,
                      const std::map<std::string, PromotedCandidate>& promoted, ShapeCache& cache) {
  struct Match {
    int x, y;
    PromotedCandidate cand;
    const std::string* key;
    std::vector<int> fragments;
  };
  std::vector<int> tile_of = tile_index(tiling);
  std::vector<Match> matches;
  for (const TreeLink& l : tiling.tree.edges) {
    int x = tile_of[static_cast<std::size_t>(l.a.node)];
    int y = tile_of[static_cast<std::size_t>(l.b.node)];
    if (x == y) continue;
    std::vector<int> frags = merged(tiling.tiles[static_cast<std::size_t>(x)].fragments,
                                    tiling.tiles[static_cast<std::size_t>(y)].fragments);
    const TileShape& s = cache.shape(monomer, tiling.tree, frags);
    auto it = promoted.find(s.key);
    if (it == promoted.end()) continue;
    matches.push_back(Match{x, y, it->second, &it->first, std::move(frags)});
  }
  if (matches.empty()) return;
  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    return std::forward_as_tuple(-a.cand.iteration, -a.cand.atom_count, *a.key, a.fragments) <
           std::forward_as_tuple(-b.cand.iteration, -b.cand.atom_count, *b.key, b.fragments);
  });
  std::vector<bool> consumed(tiling.tiles.size(), false);
  std::vector<Tile> next;
  for (const Match& m : matches) {
    if (consumed[static_cast<std::size_t>(m.x)] || consumed[static_cast<std::size_t>(m.y)]) continue;
    consumed[static_cast<std::size_t>(m.x)] = consumed[static_cast<std::size_t>(m.y)] = true;
    Tile t;
    t.entry = m.cand.entry;
    t.fragments = m.fragments;
    t.children = {tiling.tiles[static_cast<std::size_t>(m.x)], tiling.tiles[static_cast<std::size_t>(m.y)]};
    sort_tiles(t.children);
    next.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < tiling.tiles.size(); ++i) {
    if (!consumed[i]) next.push_back(std::move(tiling.tiles[i]));
  }
  sort_tiles(next);
  tiling.tiles = std::move(next);
}

int ForgeState::entry_for(const std::string& key, int iter, int atom_count) {
  auto it = by_key.find(key);
  if (it != by_key.end()) {
    MinedEntry& e = entries[static_cast<std::size_t>(it->second)];
    if (!e.live) {
      e.live = true;
      e.iteration = iter;
    }
    return it->second;
  }
  int id = static_cast<int>(entries.size());
  entries.push_back(MinedEntry{key, iter, atom_count, true, false});
  by_key.emplace(key, id);
  return id;
}

ForgeState initial_forge_state(std::span<const MolGraph> corpus) {
  ForgeState state;
  for (const MolGraph& g : corpus) {
    MonomerTiling t;
    t.tree = fragment_acyclic(g);
    for (std::size_t f = 0; f < t.tree.fragments.size(); ++f) {
      const Fragment& frag = t.tree.fragments[f];
      Tile tile;
      tile.entry = state.entry_for(frag.key, 0, frag.graph.heavy_atom_count());
      tile.fragments = {static_cast<int>(f)};
      t.tiles.push_back(std::move(tile));
    }
    state.tilings.push_back(std::move(t));
  }
  return state;
}

namespace {

void expand_dead(const std::vector<MinedEntry>& entries, Tile& tile, std::vector<Tile>& out) {
  if (entries[static_cast<std::size_t>(tile.entry)].live || tile.children.empty()) {
    out.push_back(std::move(tile));
    return;
  }
  for (Tile& child : tile.children) expand_dead(entries, child, out);
}

std::vector<long> entry_frequencies(const ForgeState& state) {
  std::vector<long> freq(state.entries.size(), 0);
  for (const MonomerTiling& t : state.tilings) {
    for (const Tile& tile : t.tiles) ++freq[static_cast<std::size_t>(tile.entry)];
  }
  return freq;
}

}  // namespace

bool forge_step(ForgeState& state, const MiningConfig& config) {
  const int iter = state.iteration + 1;
  auto candidates = enumerate_candidates(state.tilings, &state.cache);

  std::map<std::string, PromotedCandidate> promoted;
  for (const auto& [key, stats] : candidates) {
    if (stats.count <= config.threshold) continue;
    auto existing = state.by_key.find(key);
    if (existing != state.by_key.end() && state.entries[static_cast<std::size_t>(existing->second)].retired) {
      continue;
    }
    int id = state.entry_for(key, iter, stats.atom_count);
    const MinedEntry& e = state.entries[static_cast<std::size_t>(id)];
    promoted.emplace(key, PromotedCandidate{id, e.iteration, e.atom_count});
  }
  bool changed = !promoted.empty();
  for (std::size_t m = 0; m < state.tilings.size(); ++m) {
    resolve_overlaps(m, state.tilings[m], promoted, state.cache);
  }

  // Prune entries from earlier iterations that fell below threshold. Their
  // tiles re-expand into the children recorded when they were formed.
  while (true) {
    std::vector<long> freq = entry_frequencies(state);
    bool pruned = false;
    for (std::size_t i = 0; i < state.entries.size(); ++i) {
      MinedEntry& e = state.entries[i];
      if (!e.live || e.iteration == 0 || e.iteration >= iter) continue;
      if (freq[i] < config.threshold) {
        e.live = false;
        e.retired = true;
        pruned = true;
      }
    }
    if (!pruned) break;
    changed = true;
    for (MonomerTiling& t : state.tilings) {
      std::vector<Tile> next;
      for (Tile& tile : t.tiles) expand_dead(state.entries, tile, next);
      sort_tiles(next);
      t.tiles = std::move(next);
    }
  }
  state.iteration = iter;
  return changed;
}

std::map<std::string, CandidateStats> fixpoint_violations(ForgeState& state, const MiningConfig& config) {
  std::map<std::string, CandidateStats> out;
  for (auto& [key, stats] : enumerate_candidates(state.tilings, &state.cache)) {
    if (stats.count <= config.threshold) continue;
    auto it = state.by_key.find(key);
    if (it != state.by_key.end() && state.entries[static_cast<std::size_t>(it->second)].retired) continue;
    out.emplace(key, stats);
  }
  return out;
}

std::string corpus_hash(std::span<const MolGraph> corpus) {
  std::uint64_t h = kFnvOffset;
  for (const MolGraph& g : corpus) {
    h = fnv1a64(write_smiles(g), h);
    h = fnv1a64("\n", h);
  }
  return to_hex(h);
}

ForgeResult finalize_forge(const ForgeState& state, const MiningConfig& config,
                           std::span<const MolGraph> corpus, int iterations, bool converged) {
  std::vector<long> freq = entry_frequencies(state);
  std::vector<int> live;
  for (std::size_t i = 0; i < state.entries.size(); ++i) {
    if (state.entries[i].live) live.push_back(static_cast<int>(i));
  }
  std::sort(live.begin(), live.end(), [&](int a, int b) {
    const MinedEntry& x = state.entries[static_cast<std::size_t>(a)];
    const MinedEntry& y = state.entries[static_cast<std::size_t>(b)];
    return std::tie(x.iteration, x.key) < std::tie(y.iteration, y.key);
  });
  const int width = std::max<int>(4, static_cast<int>(std::to_string(live.size()).size()));
  std::vector<int> remap(state.entries.size(), -1);
  std::vector<VocabularyEntry> entries;
  for (std::size_t i = 0; i < live.size(); ++i) {
    const MinedEntry& e = state.entries[static_cast<std::size_t>(live[i])];
    std::string digits = std::to_string(i + 1);
    VocabularyEntry v;
    v.token = "G" + std::string(static_cast<std::size_t>(width) - std::min(digits.size(), static_cast<std::size_t>(width)), '0') + digits;
    v.key = e.key;
    v.atom_count = e.atom_count;
    v.iteration = e.iteration;
    v.frequency = freq[static_cast<std::size_t>(live[i])];
    entries.push_back(std::move(v));
    remap[static_cast<std::size_t>(live[i])] = static_cast<int>(i);
  }
  ForgeResult out;
  out.vocabulary = Vocabulary(std::move(entries), config.threshold, corpus_hash(corpus));
  out.iterations = iterations;
  out.converged = converged;
  for (const MonomerTiling& t : state.tilings) {
    MonomerTiling copy;
    copy.tree = t.tree;
    for (const Tile& tile : t.tiles) {
      copy.tiles.push_back(Tile{remap[static_cast<std::size_t>(tile.entry)], tile.fragments, {}});
    }
    out.tilings.push_back(std::move(copy));
  }
  return out;
}

ForgeResult forge_run(std::span<const MolGraph> corpus, const MiningConfig& config) {
  if (corpus.empty()) throw TilingError("empty corpus");
  if (config.threshold < 1) throw TilingError("threshold must be >= 1");
  ForgeState state = initial_forge_state(corpus);
  int iterations = 0;
  bool converged = false;
  while (iterations < config.max_iterations) {
    ++iterations;
    if (!forge_step(state, config)) {
      converged = true;
      break;
    }
  }
  return finalize_forge(state, config, corpus, iterations, converged);
}

// ---------------------------------------------------------------------------
// Tiling new monomers

MonomerTiling tile_with_vocabulary(const MolGraph& g, const Vocabulary& vocab) {
  MonomerTiling out;
  out.tree = fragment_acyclic(g);
  const FragmentTree& tree = out.tree;
  const int n = static_cast<int>(tree.fragments.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const TreeLink& l : tree.edges) {
    adj[static_cast<std::size_t>(l.a.node)].push_back(l.b.node);
    adj[static_cast<std::size_t>(l.b.node)].push_back(l.a.node);
  }

  const int max_size = std::min(n, vocab.max_fragment_count());
  constexpr std::size_t kMaxGroups = 200000;
  std::set<std::vector<int>> level;
  for (int i = 0; i < n; ++i) level.insert({i});
  std::vector<std::vector<int>> groups(level.begin(), level.end());
  for (int size = 2; size <= max_size && !level.empty(); ++size) {
    std::set<std::vector<int>> next;
    for (const auto& s : level) {
      for (int f : s) {
        for (int nb : adj[static_cast<std::size_t>(f)]) {
          if (std::binary_search(s.begin(), s.end(), nb)) continue;
          std::vector<int> grown = s;
          grown.insert(std::upper_bound(grown.begin(), grown.end(), nb), nb);
          next.insert(std::move(grown));
        }
      }
    }
    groups.insert(groups.end(), next.begin(), next.end());
    if (groups.size() > kMaxGroups) throw TilingError("monomer too branched to tile");
    level = std::move(next);
  }

  struct Match {
    int entry;
    std::vector<int> fragments;
  };
  std::vector<Match> matches;
  ShapeCache cache;
  for (const auto& grp : groups) {
    const TileShape& s = cache.shape(0, tree, grp);
    if (auto idx = vocab.find_key(s.key)) matches.push_back(Match{*idx, grp});
  }
  std::sort(matches.begin(), matches.end(), [&](const Match& a, const Match& b) {
    const VocabularyEntry& x = vocab.entry(a.entry);
    const VocabularyEntry& y = vocab.entry(b.entry);
    return std::forward_as_tuple(-x.iteration, -x.atom_count, x.key, a.fragments) <
           std::forward_as_tuple(-y.iteration, -y.atom_count, y.key, b.fragments);
  });
  std::vector<bool> covered(static_cast<std::size_t>(n), false);
  for (const Match& m : matches) {
    bool free = std::none_of(m.fragments.begin(), m.fragments.end(),
                             [&](int f) { return covered[static_cast<std::size_t>(f)]; });
    if (!free) continue;
    for (int f : m.fragments) covered[static_cast<std::size_t>(f)] = true;
    out.tiles.push_back(Tile{m.entry, m.fragments, {}});
  }
  for (int f = 0; f < n; ++f) {
    if (!covered[static_cast<std::size_t>(f)]) {
      throw TilingError("fragment not covered by vocabulary: " + tree.fragments[static_cast<std::size_t>(f)].key);
    }
  }
  sort_tiles(out.tiles);
  return out;
}

}  // namespace polyhappy
