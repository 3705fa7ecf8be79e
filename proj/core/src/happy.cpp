#include "polyhappy/happy.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

namespace polyhappy {

// ---------------------------------------------------------------------------
// Text form

namespace {

void flatten_into(const std::vector<HappyUnit>& units, TokenSequence& out) {
  for (const HappyUnit& u : units) {
    out.push_back(u.token);
    for (const auto& group : u.sidelines) {
      out.emplace_back("(");
      flatten_into(group, out);
      out.emplace_back(")");
    }
  }
}

class HappyParser {
 public:
  explicit HappyParser(std::span<const std::string> tokens) : tokens_(tokens) {}

  HappyString run() {
    HappyString s;
    s.units = sequence();
    if (pos_ != tokens_.size()) throw HappyError("unbalanced markers: unexpected ')'");
    return s;
  }

 private:
  std::vector<HappyUnit> sequence() {
    std::vector<HappyUnit> units;
    while (pos_ < tokens_.size() && tokens_[pos_] != ")") {
      if (tokens_[pos_] == "(") throw HappyError("sideline group without a host token");
      HappyUnit u;
      u.token = tokens_[pos_++];
      while (pos_ < tokens_.size() && tokens_[pos_] == "(") {
        ++pos_;
        std::vector<HappyUnit> group = sequence();
        if (group.empty()) throw HappyError("empty sideline group");
        if (pos_ >= tokens_.size()) throw HappyError("unbalanced markers: missing ')'");
        ++pos_;  // ')'
        u.sidelines.push_back(std::move(group));
      }
      units.push_back(std::move(u));
    }
    if (units.empty()) throw HappyError("empty HAPPY sequence");
    return units;
  }

  std::span<const std::string> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

TokenSequence flatten(const HappyString& s) {
  TokenSequence out;
  flatten_into(s.units, out);
  return out;
}

HappyString parse_happy(std::span<const std::string> tokens) { return HappyParser(tokens).run(); }

HappyString parse_happy(std::string_view text) {
  std::istringstream in{std::string(text)};
  TokenSequence tokens;
  for (std::string t; in >> t;) tokens.push_back(std::move(t));
  return parse_happy(tokens);
}

std::string to_text(const TokenSequence& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string to_text(const HappyString& s) { return to_text(flatten(s)); }

std::string_view base_token(std::string_view token) {
  return token.substr(0, token.find('@'));
}

// ---------------------------------------------------------------------------
// Port roles

namespace {

struct Roles {
  int in = 0;
  std::optional<int> out;
  std::vector<int> groups;  // ascending port ids
};

Roles default_roles(const Fragment& f, bool needs_out) {
  Roles r;
  std::size_t k = 0;
  if (k < f.ports.size()) r.in = f.ports[k++].id;
  if (needs_out && k < f.ports.size()) r.out = f.ports[k++].id;
  for (; k < f.ports.size(); ++k) r.groups.push_back(f.ports[k].id);
  return r;
}

Roles roles_with(const Fragment& f, int in, std::optional<int> out) {
  Roles r{in, out, {}};
  for (const Port& p : f.ports) {
    if (p.id != in && (!out || p.id != *out)) r.groups.push_back(p.id);
  }
  return r;
}

// Port-label form of f: port p written as "[label(p)*]".
std::string labeled_form(const Fragment& f, const std::vector<int>& label) {
  MolGraph g = f.graph;
  for (const Port& p : f.ports) {
    Atom w;
    w.element = Element::kWildcard;
    w.port_label = label[static_cast<std::size_t>(p.id)];
    int idx = g.add_atom(w);
    g.add_bond(p.atom, idx, BondOrder::kSingle);
  }
  return write_smiles(g);
}

// Port permutations induced by automorphisms of f: perm[p] is the image of
// port id p (index 0 unused). Always contains the identity first.
std::vector<std::vector<int>> port_automorphisms(const Fragment& f) {
  const int n = f.port_count();
  std::vector<int> identity(static_cast<std::size_t>(n) + 1);
  for (int p = 0; p <= n; ++p) identity[static_cast<std::size_t>(p)] = p;
  const std::string reference = labeled_form(f, identity);

  // Ports can only map within classes of equal single-port forms.
  std::vector<std::string> cls(static_cast<std::size_t>(n) + 1);
  for (int p = 1; p <= n; ++p) {
    std::vector<int> only(static_cast<std::size_t>(n) + 1, 0);
    only[static_cast<std::size_t>(p)] = 1;
    cls[static_cast<std::size_t>(p)] = labeled_form(f, only);
  }

  std::vector<std::vector<int>> out{identity};
  std::vector<int> perm(static_cast<std::size_t>(n) + 1, 0);
  std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
  std::function<void(int)> extend = [&](int p) {
    if (p > n) {
      if (perm == identity) return;
      // labeled_form with label[q] = perm^-1(q) equals the reference iff
      // perm is induced by an automorphism.
      std::vector<int> label(static_cast<std::size_t>(n) + 1, 0);
      for (int q = 1; q <= n; ++q) label[static_cast<std::size_t>(perm[static_cast<std::size_t>(q)])] = q;
      if (labeled_form(f, label) == reference) out.push_back(perm);
      return;
    }
    for (int q = 1; q <= n; ++q) {
      if (used[static_cast<std::size_t>(q)] || cls[static_cast<std::size_t>(q)] != cls[static_cast<std::size_t>(p)]) continue;
      used[static_cast<std::size_t>(q)] = true;
      perm[static_cast<std::size_t>(p)] = q;
      extend(p + 1);
      used[static_cast<std::size_t>(q)] = false;
    }
  };
  extend(1);
  return out;
}

TokenSequence flat(const std::vector<HappyUnit>& units) {
  TokenSequence t;
  flatten_into(units, t);
  return t;
}

// Builds the lexicographically smallest text for a tiled monomer. Port ids
// on a tile are fixed only up to automorphisms of its fragment, so every
// unit is written under the automorphism that minimizes its tokens.
class CanonicalWriter {
 public:
  CanonicalWriter(const TiledMonomer& m, const Vocabulary& vocab) : m_(m), vocab_(vocab) {}

  HappyString mainline(const std::array<PortRef, 2>& ends) {
    MainlineDecomposition d = locate_mainline(static_cast<int>(m_.units.size()), m_.links, ends);
    HappyString s;
    for (std::size_t i = 0; i < d.mainline.size(); ++i) {
      int node = d.mainline[i];
      std::map<int, std::vector<HappyUnit>> groups;
      auto it = d.sidelines.find(node);
      if (it != d.sidelines.end()) {
        for (const Sideline& sl : it->second) groups.emplace(sl.host_port, chain(sl));
      }
      s.units.push_back(best_unit(node, d.mainline_ports[i][0], d.mainline_ports[i][1], groups));
    }
    return s;
  }

 private:
  // Sideline subtree written as a chain through one of its children.
  std::vector<HappyUnit> chain(const Sideline& s) {
    if (s.children.empty()) return {best_unit(s.node, s.attach_port, std::nullopt, {})};
    std::vector<std::vector<HappyUnit>> encoded;
    for (const Sideline& c : s.children) encoded.push_back(chain(c));
    std::optional<std::vector<HappyUnit>> best;
    TokenSequence best_flat;
    for (std::size_t j = 0; j < s.children.size(); ++j) {
      std::map<int, std::vector<HappyUnit>> groups;
      for (std::size_t k = 0; k < s.children.size(); ++k) {
        if (k != j) groups.emplace(s.children[k].host_port, encoded[k]);
      }
      std::vector<HappyUnit> candidate{best_unit(s.node, s.attach_port, s.children[j].host_port, groups)};
      candidate.insert(candidate.end(), encoded[j].begin(), encoded[j].end());
      TokenSequence f = flat(candidate);
      if (!best || f < best_flat) {
        best = std::move(candidate);
        best_flat = std::move(f);
      }
    }
    return *best;
  }

  HappyUnit best_unit(int node, int in, std::optional<int> out, const std::map<int, std::vector<HappyUnit>>& groups) {
    int entry = m_.entries[static_cast<std::size_t>(node)];
    const Fragment& f = vocab_.fragment(entry);
    const std::string& name = vocab_.entry(entry).token;
    std::optional<HappyUnit> best;
    TokenSequence best_flat;
    for (const auto& perm : automorphisms(entry)) {
      auto image = [&](int p) { return perm[static_cast<std::size_t>(p)]; };
      HappyUnit u;
      u.token = name;
      int din = image(in);
      std::optional<int> dout;
      if (out) dout = image(*out);
      if (din != 1 || (dout && *dout != 2)) {
        u.token += '@' + std::to_string(din);
        if (dout) u.token += ',' + std::to_string(*dout);
      }
      // Sideline groups in ascending order of their image port.
      std::vector<std::pair<int, const std::vector<HappyUnit>*>> placed;
      for (const auto& [port, units] : groups) placed.emplace_back(image(port), &units);
      std::sort(placed.begin(), placed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [q, units] : placed) u.sidelines.push_back(*units);
      TokenSequence fl = flat({u});
      if (!best || fl < best_flat) {
        best = std::move(u);
        best_flat = std::move(fl);
      }
    }
    if (static_cast<int>(groups.size()) + 1 + (out ? 1 : 0) != f.port_count()) {
      throw HappyError("tile " + name + " has unlinked ports");
    }
    return *best;
  }

  const std::vector<std::vector<int>>& automorphisms(int entry) {
    auto it = autos_.find(entry);
    if (it == autos_.end()) it = autos_.emplace(entry, port_automorphisms(vocab_.fragment(entry))).first;
    return it->second;
  }

  const TiledMonomer& m_;
  const Vocabulary& vocab_;
  std::map<int, std::vector<std::vector<int>>> autos_;
};

}  // namespace

HappyString encode(const TiledMonomer& monomer, const Vocabulary& vocab) {
  for (int e : monomer.entries) {
    if (e < 0 || e >= vocab.size()) throw HappyError("tile references an entry outside the vocabulary");
  }
  CanonicalWriter writer(monomer, vocab);
  HappyString forward = writer.mainline(monomer.ends);
  HappyString backward = writer.mainline({monomer.ends[1], monomer.ends[0]});
  return flatten(backward) < flatten(forward) ? backward : forward;
}

HappyString encode(const MonomerTiling& tiling, const Vocabulary& vocab) {
  return encode(tile_view(tiling), vocab);
}

HappyString encode(const MolGraph& g, const Vocabulary& vocab) {
  try {
    return encode(tile_with_vocabulary(g, vocab), vocab);
  } catch (const TilingError& e) {
    throw HappyError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Decoding

namespace {

class Assembler {
 public:
  explicit Assembler(const Vocabulary& vocab) : vocab_(vocab) {}

  MolGraph run(const HappyString& s) {
    if (s.units.empty()) throw HappyError("empty HAPPY string");
    int prev_atom = -1;
    for (std::size_t i = 0; i < s.units.size(); ++i) {
      Placed p = place(s.units[i], true);
      if (i == 0) {
        add_end(p.in_atom);
      } else {
        g_.add_bond(prev_atom, p.in_atom, BondOrder::kSingle);
      }
      prev_atom = p.out_atom;
    }
    add_end(prev_atom);
    return std::move(g_);
  }

 private:
  struct Placed {
    int in_atom;
    int out_atom;
  };

  Placed place(const HappyUnit& u, bool needs_out) {
    std::string_view base = base_token(u.token);
    auto entry = vocab_.find_token(std::string(base));
    if (!entry) throw HappyError("unknown token " + u.token);
    const Fragment& f = vocab_.fragment(*entry);
    Roles r = roles(u.token, f, needs_out);
    if (r.groups.size() != u.sidelines.size()) {
      throw HappyError("port arity mismatch for " + u.token + ": " + std::to_string(r.groups.size()) +
                       " free ports, " + std::to_string(u.sidelines.size()) + " sideline groups");
    }
    const int offset = g_.atom_count();
    for (const Atom& a : f.graph.atoms()) g_.add_atom(a);
    for (const Bond& b : f.graph.bonds()) g_.add_bond(offset + b.begin, offset + b.end, b.order);
    auto atom_of = [&](int port) { return offset + f.port(port).atom; };

    for (std::size_t k = 0; k < u.sidelines.size(); ++k) {
      const auto& group = u.sidelines[k];
      int host = atom_of(r.groups[k]);
      for (std::size_t j = 0; j < group.size(); ++j) {
        Placed child = place(group[j], j + 1 < group.size());
        g_.add_bond(host, child.in_atom, BondOrder::kSingle);
        host = child.out_atom;
      }
    }
    return Placed{atom_of(r.in), r.out ? atom_of(*r.out) : -1};
  }

  Roles roles(const std::string& token, const Fragment& f, bool needs_out) const {
    const std::size_t need = needs_out ? 2 : 1;
    if (f.ports.size() < need) {
      throw HappyError("port arity mismatch for " + token + ": needs " + std::to_string(need) +
                       " ports, has " + std::to_string(f.ports.size()));
    }
    auto at = token.find('@');
    if (at == std::string::npos) return default_roles(f, needs_out);
    std::string spec = token.substr(at + 1);
    auto parse_port = [&](const std::string& text) {
      if (text.empty() || !std::all_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        throw HappyError("malformed port annotation in " + token);
      }
      int id = std::stoi(text);
      if (id < 1 || id > f.port_count()) throw HappyError("port annotation out of range in " + token);
      return id;
    };
    auto comma = spec.find(',');
    int in = parse_port(spec.substr(0, comma));
    std::optional<int> out;
    if (comma != std::string::npos) out = parse_port(spec.substr(comma + 1));
    if (out.has_value() != needs_out) throw HappyError("port annotation arity mismatch in " + token);
    if (out && *out == in) throw HappyError("port annotation repeats a port in " + token);
    return roles_with(f, in, out);
  }

  void add_end(int atom) {
    Atom w;
    w.element = Element::kWildcard;
    int idx = g_.add_atom(w);
    g_.add_bond(atom, idx, BondOrder::kSingle);
  }

  const Vocabulary& vocab_;
  MolGraph g_;
};

}  // namespace

MolGraph decode(const HappyString& s, const Vocabulary& vocab) { return Assembler(vocab).run(s); }

// ---------------------------------------------------------------------------
// SMILES tokens

TokenSequence tokenize_smiles(std::string_view text) {
  TokenSequence out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '[') {
      std::size_t close = text.find(']', i);
      if (close == std::string_view::npos) throw ParseError(i, "unterminated bracket atom");
      out.emplace_back(text.substr(i, close - i + 1));
      i = close + 1;
    } else if (c == '%') {
      if (i + 2 >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text[i + 2]))) {
        throw ParseError(i, "malformed %nn ring closure");
      }
      out.emplace_back(text.substr(i, 3));
      i += 3;
    } else if (i + 1 < text.size() && (text.substr(i, 2) == "Cl" || text.substr(i, 2) == "Br" ||
                                       text.substr(i, 2) == "Si")) {
      out.emplace_back(text.substr(i, 2));
      i += 2;
    } else if (std::string_view("BCNOPSFIbcnops*").find(c) != std::string_view::npos ||
               std::string_view("-=#:/\\.()").find(c) != std::string_view::npos ||
               std::isdigit(static_cast<unsigned char>(c))) {
      out.emplace_back(1, c);
      ++i;
    } else {
      throw ParseError(i, std::string("unexpected character '") + c + "'");
    }
  }
  return out;
}

}  // namespace polyhappy
