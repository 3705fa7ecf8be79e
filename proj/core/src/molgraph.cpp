#include "polyhappy/molgraph.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <utility>

namespace polyhappy {

namespace {

struct ElementInfo {
  Element element;
  std::string_view symbol;
  std::array<int, 3> valences;  // ascending, zero padded
  bool organic;                 // may be written without brackets
};

constexpr std::array<ElementInfo, 13> kElements{{
    {Element::kWildcard, "*", {0, 0, 0}, true},
    {Element::kH, "H", {1, 0, 0}, false},
    {Element::kB, "B", {3, 0, 0}, true},
    {Element::kC, "C", {4, 0, 0}, true},
    {Element::kN, "N", {3, 0, 0}, true},
    {Element::kO, "O", {2, 0, 0}, true},
    {Element::kF, "F", {1, 0, 0}, true},
    {Element::kSi, "Si", {4, 0, 0}, false},
    {Element::kP, "P", {3, 5, 0}, true},
    {Element::kS, "S", {2, 4, 6}, true},
    {Element::kCl, "Cl", {1, 0, 0}, true},
    {Element::kBr, "Br", {1, 0, 0}, true},
    {Element::kI, "I", {1, 0, 0}, true},
}};

const ElementInfo& info(Element e) {
  return kElements[static_cast<std::size_t>(e)];
}

bool can_be_aromatic(Element e) {
  switch (e) {
    case Element::kB:
    case Element::kC:
    case Element::kN:
    case Element::kO:
    case Element::kP:
    case Element::kS:
      return true;
    default:
      return false;
  }
}

// Valences shifted by formal charge: N+ behaves like C, O- like F, C- like N.
std::vector<int> allowed_valences(const Atom& a) {
  std::vector<int> out;
  for (int v : info(a.element).valences) {
    if (v == 0) continue;
    int adjusted = v;
    switch (a.element) {
      case Element::kB:
        adjusted = v - a.formal_charge;
        break;
      case Element::kC:
      case Element::kSi:
        adjusted = v - std::abs(a.formal_charge);
        break;
      default:
        adjusted = v + a.formal_charge;
        break;
    }
    if (adjusted >= 0) out.push_back(adjusted);
  }
  return out;
}

struct BondSums {
  int aromatic = 0;  // number of aromatic bonds
  int other = 0;     // summed order of non-aromatic bonds
};

BondSums bond_sums(const MolGraph& g, int atom) {
  BondSums s;
  for (const Neighbor& n : g.neighbors(atom)) {
    BondOrder o = g.bond(n.bond).order;
    if (o == BondOrder::kAromatic) {
      ++s.aromatic;
    } else {
      s.other += static_cast<int>(o);
    }
  }
  return s;
}

// Aromatic bonds count 1.5 each, rounded down over the atom.
int rounded_valence(const BondSums& s) { return (3 * s.aromatic) / 2 + s.other; }

}  // namespace

std::string_view element_symbol(Element e) { return info(e).symbol; }

std::optional<Element> element_from_symbol(std::string_view symbol) {
  for (const ElementInfo& e : kElements) {
    if (e.symbol == symbol) return e.element;
  }
  return std::nullopt;
}

int MolGraph::add_atom(const Atom& atom) {
  atoms_.push_back(atom);
  adjacency_.emplace_back();
  return atom_count() - 1;
}

int MolGraph::add_bond(int a, int b, BondOrder order) {
  if (a < 0 || b < 0 || a >= atom_count() || b >= atom_count()) {
    throw GraphError("bond endpoint out of range");
  }
  if (a == b) throw GraphError("bond endpoints must differ");
  if (find_bond(a, b) >= 0) throw GraphError("duplicate bond");
  bonds_.push_back(Bond{a, b, order});
  int idx = bond_count() - 1;
  adjacency_[static_cast<std::size_t>(a)].push_back(Neighbor{b, idx});
  adjacency_[static_cast<std::size_t>(b)].push_back(Neighbor{a, idx});
  return idx;
}

void MolGraph::set_bond_order(int bond, BondOrder order) {
  bonds_[static_cast<std::size_t>(bond)].order = order;
}

int MolGraph::find_bond(int a, int b) const {
  if (a < 0 || a >= atom_count()) return -1;
  for (const Neighbor& n : adjacency_[static_cast<std::size_t>(a)]) {
    if (n.atom == b) return n.bond;
  }
  return -1;
}

int MolGraph::wildcard_count() const {
  return static_cast<int>(std::count_if(
      atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.is_wildcard(); }));
}

int MolGraph::heavy_atom_count() const {
  return static_cast<int>(
      std::count_if(atoms_.begin(), atoms_.end(), [](const Atom& a) {
        return !a.is_wildcard() && a.element != Element::kH;
      }));
}

int MolGraph::component_count() const {
  std::vector<int> seen(atoms_.size(), 0);
  int components = 0;
  std::vector<int> stack;
  for (int start = 0; start < atom_count(); ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    ++components;
    stack.push_back(start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const Neighbor& n : neighbors(u)) {
        if (!seen[static_cast<std::size_t>(n.atom)]) {
          seen[static_cast<std::size_t>(n.atom)] = 1;
          stack.push_back(n.atom);
        }
      }
    }
  }
  return components;
}

int default_implicit_hydrogens(const MolGraph& g, int atom) {
  const Atom& a = g.atom(atom);
  if (a.is_wildcard() || a.element == Element::kH) return 0;
  BondSums s = bond_sums(g, atom);
  int used = rounded_valence(s);
  std::vector<int> valences = allowed_valences(a);
  if (valences.empty()) return 0;
  if (a.aromatic) {
    // Aromatic atoms never promote to a hypervalent state.
    return std::max(0, valences.front() - used);
  }
  for (int v : valences) {
    if (v >= used) return v - used;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Ring bonds (bridge detection)

std::vector<bool> ring_bonds(const MolGraph& g) {
  const int n = g.atom_count();
  std::vector<int> disc(static_cast<std::size_t>(n), -1);
  std::vector<int> low(static_cast<std::size_t>(n), 0);
  std::vector<bool> in_ring(static_cast<std::size_t>(g.bond_count()), true);
  int timer = 0;

  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  std::vector<Frame> stack;
  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<std::size_t>(root)] >= 0) continue;
    disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
    stack.push_back({root, -1, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      auto nbrs = g.neighbors(f.atom);
      if (f.next < nbrs.size()) {
        Neighbor nb = nbrs[f.next++];
        if (nb.bond == f.parent_bond) continue;
        auto v = static_cast<std::size_t>(nb.atom);
        if (disc[v] < 0) {
          disc[v] = low[v] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          auto u = static_cast<std::size_t>(f.atom);
          low[u] = std::min(low[u], disc[v]);
        }
      } else {
        Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          auto u = static_cast<std::size_t>(stack.back().atom);
          auto v = static_cast<std::size_t>(done.atom);
          low[u] = std::min(low[u], low[v]);
          if (low[v] > disc[u]) {
            in_ring[static_cast<std::size_t>(done.parent_bond)] = false;
          }
        }
      }
    }
  }
  return in_ring;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  MolGraph run() {
    if (text_.empty()) throw ParseError(0, "empty SMILES");
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '(') {
        if (prev_ < 0) throw ParseError(pos_, "branch opened before any atom");
        if (pending_bond_) throw ParseError(pos_, "bond symbol before branch");
        branches_.push_back({prev_, pos_});
        ++pos_;
      } else if (c == ')') {
        if (branches_.empty()) throw ParseError(pos_, "unbalanced parentheses");
        if (pending_bond_) {
          throw ParseError(pending_bond_pos_, "bond to nonexistent atom");
        }
        prev_ = branches_.back().atom;
        branches_.pop_back();
        ++pos_;
      } else if (c == '.') {
        if (pending_bond_) throw ParseError(pending_bond_pos_, "bond to nonexistent atom");
        prev_ = -1;
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':') {
        if (pending_bond_) throw ParseError(pos_, "consecutive bond symbols");
        if (prev_ < 0) throw ParseError(pos_, "bond to nonexistent atom");
        pending_bond_ = c == '-'   ? BondOrder::kSingle
                        : c == '=' ? BondOrder::kDouble
                        : c == '#' ? BondOrder::kTriple
                                   : BondOrder::kAromatic;
        pending_bond_pos_ = pos_;
        ++pos_;
      } else if (c == '/' || c == '\\') {
        throw ParseError(pos_, "stereo bonds are not supported");
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_closure();
      } else if (c == '[') {
        add_atom(bracket_atom());
      } else {
        add_atom(organic_atom());
      }
    }
    if (!branches_.empty()) {
      throw ParseError(branches_.back().position, "unbalanced parentheses");
    }
    if (pending_bond_) throw ParseError(pending_bond_pos_, "bond to nonexistent atom");
    if (!open_rings_.empty()) {
      const OpenRing& r = open_rings_.begin()->second;
      throw ParseError(r.position, "ring closure " +
                                       std::to_string(open_rings_.begin()->first) +
                                       " never closed");
    }
    finish();
    g_.set_source_text(std::string(text_));
    return std::move(g_);
  }

 private:
  struct Branch {
    int atom;
    std::size_t position;
  };
  struct OpenRing {
    int atom;
    std::optional<BondOrder> order;
    std::size_t position;
  };
  struct ParsedAtom {
    Atom atom;
    bool bracket;
    std::size_t position;
  };

  void add_atom(const ParsedAtom& p) {
    int idx = g_.add_atom(p.atom);
    bracket_.push_back(p.bracket);
    if (prev_ >= 0) {
      BondOrder order = pending_bond_.value_or(implicit_order(prev_, idx));
      int b = g_.add_bond(prev_, idx, order);
      if (!pending_bond_) implicit_bonds_.push_back(b);
    }
    pending_bond_.reset();
    prev_ = idx;
  }

  BondOrder implicit_order(int a, int b) const {
    return g_.atom(a).aromatic && g_.atom(b).aromatic ? BondOrder::kAromatic
                                                       : BondOrder::kSingle;
  }

  void ring_closure() {
    std::size_t start = pos_;
    if (prev_ < 0) throw ParseError(pos_, "ring closure before any atom");
    int number = 0;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
        throw ParseError(pos_, "malformed %nn ring closure");
      }
      number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = text_[pos_] - '0';
      ++pos_;
    }
    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      open_rings_[number] = OpenRing{prev_, pending_bond_, start};
      pending_bond_.reset();
      return;
    }
    OpenRing open = it->second;
    open_rings_.erase(it);
    if (open.atom == prev_) throw ParseError(start, "ring closure onto the same atom");
    if (g_.find_bond(open.atom, prev_) >= 0) {
      throw ParseError(start, "ring closure duplicates an existing bond");
    }
    if (open.order && pending_bond_ && *open.order != *pending_bond_) {
      throw ParseError(start, "conflicting ring closure bond orders");
    }
    std::optional<BondOrder> order = open.order ? open.order : pending_bond_;
    int b = g_.add_bond(open.atom, prev_, order.value_or(implicit_order(open.atom, prev_)));
    if (!order) implicit_bonds_.push_back(b);
    pending_bond_.reset();
  }

  ParsedAtom organic_atom() {
    std::size_t start = pos_;
    char c = text_[pos_];
    Atom a;
    if (c == '*') {
      a.element = Element::kWildcard;
      ++pos_;
      return {a, false, start};
    }
    if (pos_ + 1 < text_.size()) {
      std::string_view two = text_.substr(pos_, 2);
      if (two == "Cl" || two == "Br" || two == "Si") {
        a.element = *element_from_symbol(two);
        pos_ += 2;
        return {a, false, start};
      }
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      auto e = element_from_symbol(std::string_view(&upper, 1));
      if (!e || !can_be_aromatic(*e)) {
        throw ParseError(pos_, std::string("unknown element '") + c + "'");
      }
      a.element = *e;
      a.aromatic = true;
      ++pos_;
      return {a, false, start};
    }
    auto e = element_from_symbol(std::string_view(&text_[pos_], 1));
    if (!e || !info(*e).organic || *e == Element::kWildcard) {
      throw ParseError(pos_, std::string("unknown element '") + c + "'");
    }
    a.element = *e;
    ++pos_;
    return {a, false, start};
  }

  ParsedAtom bracket_atom() {
    std::size_t start = pos_;
    ++pos_;  // '['
    Atom a;
    int label = -1;
    if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      label = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        label = label * 10 + (text_[pos_] - '0');
        ++pos_;
      }
    }
    if (pos_ >= text_.size()) throw ParseError(start, "unterminated bracket atom");
    std::size_t sym_pos = pos_;
    char c = text_[pos_];
    if (c == '*') {
      a.element = Element::kWildcard;
      ++pos_;
    } else if (std::islower(static_cast<unsigned char>(c))) {
      char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      auto e = element_from_symbol(std::string_view(&upper, 1));
      if (!e || !can_be_aromatic(*e)) {
        throw ParseError(sym_pos, std::string("unknown element '") + c + "'");
      }
      a.element = *e;
      a.aromatic = true;
      ++pos_;
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::optional<Element> e;
      if (pos_ + 1 < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
        e = element_from_symbol(text_.substr(pos_, 2));
        if (e) pos_ += 2;
      }
      if (!e) {
        e = element_from_symbol(text_.substr(pos_, 1));
        if (!e) throw ParseError(sym_pos, std::string("unknown element '") + c + "'");
        ++pos_;
      }
      a.element = *e;
    } else {
      throw ParseError(sym_pos, "expected element symbol in bracket atom");
    }
    if (label >= 0) {
      if (!a.is_wildcard()) throw ParseError(start + 1, "isotopes are not supported");
      a.port_label = label;
    }
    if (pos_ < text_.size() && text_[pos_] == '@') {
      throw ParseError(pos_, "chirality is not supported");
    }
    if (pos_ < text_.size() && text_[pos_] == 'H') {
      ++pos_;
      int h = 1;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        h = text_[pos_] - '0';
        ++pos_;
      }
      a.hydrogens = h;
    }
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      char sign = text_[pos_];
      int magnitude = 1;
      ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        magnitude = text_[pos_] - '0';
        ++pos_;
      } else {
        while (pos_ < text_.size() && text_[pos_] == sign) {
          ++magnitude;
          ++pos_;
        }
      }
      a.formal_charge = sign == '+' ? magnitude : -magnitude;
    }
    if (pos_ < text_.size() && text_[pos_] == ':') {
      throw ParseError(pos_, "atom classes are not supported");
    }
    if (pos_ >= text_.size() || text_[pos_] != ']') {
      throw ParseError(pos_ < text_.size() ? pos_ : start, "unterminated bracket atom");
    }
    ++pos_;
    if (a.is_wildcard() && (a.formal_charge != 0 || a.hydrogens != 0)) {
      throw ParseError(sym_pos, "wildcard atoms carry no charge or hydrogens");
    }
    return {a, true, start};
  }

  void finish() {
    // An implicit bond between aromatic atoms is aromatic only inside a ring.
    if (!implicit_bonds_.empty()) {
      std::vector<bool> cyclic = ring_bonds(g_);
      for (int b : implicit_bonds_) {
        if (g_.bond(b).order == BondOrder::kAromatic && !cyclic[static_cast<std::size_t>(b)]) {
          g_.set_bond_order(b, BondOrder::kSingle);
        }
      }
    }
    for (int i = 0; i < g_.atom_count(); ++i) {
      if (!bracket_[static_cast<std::size_t>(i)]) {
        g_.mutable_atom(i).hydrogens = default_implicit_hydrogens(g_, i);
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  MolGraph g_;
  std::vector<bool> bracket_;
  std::vector<int> implicit_bonds_;
  std::vector<Branch> branches_;
  std::map<int, OpenRing> open_rings_;
  int prev_ = -1;
  std::optional<BondOrder> pending_bond_;
  std::size_t pending_bond_pos_ = 0;
};

}  // namespace

MolGraph parse_smiles(std::string_view text) { return SmilesParser(text).run(); }

// ---------------------------------------------------------------------------
// Valence

ValidityReport check_valence(const MolGraph& g) {
  ValidityReport report;
  for (int i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atom(i);
    if (a.is_wildcard()) {
      if (g.degree(i) != 1) {
        report.violations.push_back(
            {i, "wildcard degree " + std::to_string(g.degree(i)) + " != 1"});
      }
      continue;
    }
    if (a.hydrogens < 0) {
      report.violations.push_back({i, "negative hydrogen count"});
      continue;
    }
    if (a.aromatic && !can_be_aromatic(a.element)) {
      report.violations.push_back({i, "element cannot be aromatic"});
      continue;
    }
    BondSums s = bond_sums(g, i);
    std::vector<int> valences = allowed_valences(a);
    int limit = valences.empty() ? 0 : valences.back();
    int used = rounded_valence(s) + a.hydrogens;
    // Pyrrole-type aromatic atoms donate a lone pair instead of a double bond.
    int lone_pair_form = s.aromatic + s.other + a.hydrogens;
    bool ok = used <= limit || (s.aromatic > 0 && lone_pair_form <= limit);
    if (!ok) {
      report.violations.push_back(
          {i, "valence " + std::to_string(used) + " > " + std::to_string(limit)});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Canonical ranking

namespace {

// Dense ranks of keys (equal keys share a rank).
template <typename Key>
std::vector<int> dense_ranks(const std::vector<Key>& keys) {
  std::vector<int> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return keys[static_cast<std::size_t>(x)] < keys[static_cast<std::size_t>(y)];
  });
  std::vector<int> ranks(keys.size(), 0);
  int r = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && keys[static_cast<std::size_t>(order[i - 1])] <
                     keys[static_cast<std::size_t>(order[i])]) {
      ++r;
    }
    ranks[static_cast<std::size_t>(order[i])] = r;
  }
  return ranks;
}

int class_count(const std::vector<int>& ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

std::vector<int> refine(const MolGraph& g, std::vector<int> ranks) {
  int classes = class_count(ranks);
  while (true) {
    using Key = std::pair<int, std::vector<std::pair<int, int>>>;
    std::vector<Key> keys(ranks.size());
    for (int i = 0; i < g.atom_count(); ++i) {
      Key& k = keys[static_cast<std::size_t>(i)];
      k.first = ranks[static_cast<std::size_t>(i)];
      for (const Neighbor& n : g.neighbors(i)) {
        k.second.emplace_back(ranks[static_cast<std::size_t>(n.atom)],
                              static_cast<int>(g.bond(n.bond).order));
      }
      std::sort(k.second.begin(), k.second.end());
    }
    std::vector<int> next = dense_ranks(keys);
    int next_classes = class_count(next);
    ranks = std::move(next);
    if (next_classes == classes) return ranks;
    classes = next_classes;
  }
}

}  // namespace

std::vector<int> canonical_rank(const MolGraph& g) {
  const int n = g.atom_count();
  using Invariant = std::array<int, 6>;
  std::vector<Invariant> initial(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atom(i);
    initial[static_cast<std::size_t>(i)] = {static_cast<int>(a.element), g.degree(i),
                                            a.formal_charge, a.aromatic ? 1 : 0,
                                            a.hydrogens, a.port_label};
  }
  std::vector<int> ranks = refine(g, dense_ranks(initial));
  while (class_count(ranks) < n) {
    // Individualize the lowest-index atom of the lowest tied class.
    std::vector<int> size(static_cast<std::size_t>(n), 0);
    for (int r : ranks) ++size[static_cast<std::size_t>(r)];
    int tied = 0;
    while (size[static_cast<std::size_t>(tied)] < 2) ++tied;
    int chosen = -1;
    for (int i = 0; i < n && chosen < 0; ++i) {
      if (ranks[static_cast<std::size_t>(i)] == tied) chosen = i;
    }
    std::vector<std::pair<int, int>> keys(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      keys[static_cast<std::size_t>(i)] = {ranks[static_cast<std::size_t>(i)], i == chosen ? 0 : 1};
    }
    ranks = refine(g, dense_ranks(keys));
  }
  return ranks;
}

// ---------------------------------------------------------------------------
// Writing

namespace {

bool writes_bare(const MolGraph& g, int i) {
  const Atom& a = g.atom(i);
  if (a.is_wildcard()) return a.port_label == 0;
  if (!info(a.element).organic || a.formal_charge != 0) return false;
  return a.hydrogens == default_implicit_hydrogens(g, i);
}

void append_atom(std::string& out, const MolGraph& g, int i) {
  const Atom& a = g.atom(i);
  std::string symbol(element_symbol(a.element));
  if (a.aromatic) symbol[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));
  if (writes_bare(g, i)) {
    out += symbol;
    return;
  }
  out += '[';
  if (a.port_label > 0) out += std::to_string(a.port_label);
  out += symbol;
  if (a.hydrogens > 0) {
    out += 'H';
    if (a.hydrogens > 1) out += std::to_string(a.hydrogens);
  }
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? '+' : '-';
    if (std::abs(a.formal_charge) > 1) out += std::to_string(std::abs(a.formal_charge));
  }
  out += ']';
}

void append_bond(std::string& out, const MolGraph& g, int bond, const std::vector<bool>& cyclic) {
  const Bond& b = g.bond(bond);
  bool both_aromatic = g.atom(b.begin).aromatic && g.atom(b.end).aromatic;
  switch (b.order) {
    case BondOrder::kSingle:
      if (both_aromatic) out += '-';
      break;
    case BondOrder::kDouble:
      out += '=';
      break;
    case BondOrder::kTriple:
      out += '#';
      break;
    case BondOrder::kAromatic:
      if (!both_aromatic || !cyclic[static_cast<std::size_t>(bond)]) out += ':';
      break;
  }
}

void append_ring_number(std::string& out, int number) {
  if (number < 10) {
    out += static_cast<char>('0' + number);
  } else {
    out += '%';
    out += std::to_string(number);
  }
}

class SmilesWriter {
 public:
  explicit SmilesWriter(const MolGraph& g)
      : g_(g), rank_(canonical_rank(g)), cyclic_(ring_bonds(g)) {
    const auto n = static_cast<std::size_t>(g.atom_count());
    state_.assign(n, 0);
    children_.resize(n);
    closures_.resize(n);
  }

  std::string run() {
    std::vector<int> order(static_cast<std::size_t>(g_.atom_count()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return rank(a) < rank(b); });
    std::string out;
    for (int root : order) {
      if (state_[static_cast<std::size_t>(root)] != 0) continue;
      if (!out.empty()) out += '.';
      build(root, -1);
      emit(out, root);
    }
    return out;
  }

 private:
  int rank(int a) const { return rank_[static_cast<std::size_t>(a)]; }

  std::vector<Neighbor> sorted_neighbors(int u) const {
    auto span = g_.neighbors(u);
    std::vector<Neighbor> nbrs(span.begin(), span.end());
    std::sort(nbrs.begin(), nbrs.end(),
              [&](const Neighbor& a, const Neighbor& b) { return rank(a.atom) < rank(b.atom); });
    return nbrs;
  }

  // Spanning-tree pass: records children and ring-closure bonds.
  void build(int u, int parent_bond) {
    state_[static_cast<std::size_t>(u)] = 1;
    for (const Neighbor& nb : sorted_neighbors(u)) {
      if (nb.bond == parent_bond) continue;
      int s = state_[static_cast<std::size_t>(nb.atom)];
      if (s == 0) {
        children_[static_cast<std::size_t>(u)].push_back(nb);
        build(nb.atom, nb.bond);
      } else if (s == 1) {
        closures_[static_cast<std::size_t>(u)].push_back(nb);
        closures_[static_cast<std::size_t>(nb.atom)].push_back(Neighbor{u, nb.bond});
      }
    }
    state_[static_cast<std::size_t>(u)] = 2;
  }

  void emit(std::string& out, int u) {
    append_atom(out, g_, u);
    std::vector<Neighbor>& rings = closures_[static_cast<std::size_t>(u)];
    // Closing digits first, then openings, each in partner rank order.
    std::vector<Neighbor> closing, opening;
    for (const Neighbor& nb : rings) {
      (ring_digit_.count(nb.bond) ? closing : opening).push_back(nb);
    }
    auto by_rank = [&](const Neighbor& a, const Neighbor& b) { return rank(a.atom) < rank(b.atom); };
    std::sort(closing.begin(), closing.end(), by_rank);
    std::sort(opening.begin(), opening.end(), by_rank);
    for (const Neighbor& nb : closing) {
      int digit = ring_digit_[nb.bond];
      append_ring_number(out, digit);
      free_digits_.push_back(digit);
      ring_digit_.erase(nb.bond);
    }
    for (const Neighbor& nb : opening) {
      int digit = take_digit();
      ring_digit_[nb.bond] = digit;
      append_bond(out, g_, nb.bond, cyclic_);
      append_ring_number(out, digit);
    }
    const std::vector<Neighbor>& kids = children_[static_cast<std::size_t>(u)];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      bool last = i + 1 == kids.size();
      if (!last) out += '(';
      append_bond(out, g_, kids[i].bond, cyclic_);
      emit(out, kids[i].atom);
      if (!last) out += ')';
    }
  }

  int take_digit() {
    if (!free_digits_.empty()) {
      auto it = std::min_element(free_digits_.begin(), free_digits_.end());
      int d = *it;
      free_digits_.erase(it);
      return d;
    }
    return ++max_digit_;
  }

  const MolGraph& g_;
  std::vector<int> rank_;
  std::vector<bool> cyclic_;
  std::vector<int> state_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<Neighbor>> closures_;
  std::map<int, int> ring_digit_;
  std::vector<int> free_digits_;
  int max_digit_ = 0;
};

}  // namespace

std::string write_smiles(const MolGraph& g) { return SmilesWriter(g).run(); }

bool graph_isomorphic(const MolGraph& a, const MolGraph& b) {
  if (a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count()) return false;
  return write_smiles(a) == write_smiles(b);
}

MolGraph permute_atoms(const MolGraph& g, std::span<const int> perm) {
  const int n = g.atom_count();
  std::vector<int> inverse(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;
  MolGraph out;
  for (int j = 0; j < n; ++j) out.add_atom(g.atom(inverse[static_cast<std::size_t>(j)]));
  // Bond order is also shuffled so adjacency lists differ from the input.
  std::vector<int> bond_order(static_cast<std::size_t>(g.bond_count()));
  std::iota(bond_order.begin(), bond_order.end(), 0);
  std::sort(bond_order.begin(), bond_order.end(), [&](int x, int y) {
    auto key = [&](int b) {
      const Bond& bd = g.bond(b);
      int p = perm[static_cast<std::size_t>(bd.begin)], q = perm[static_cast<std::size_t>(bd.end)];
      return std::make_pair(std::min(p, q), std::max(p, q));
    };
    return key(x) < key(y);
  });
  for (int b : bond_order) {
    const Bond& bd = g.bond(b);
    out.add_bond(perm[static_cast<std::size_t>(bd.end)], perm[static_cast<std::size_t>(bd.begin)], bd.order);
  }
  if (g.source_text()) out.set_source_text(*g.source_text());
  return out;
}

// ---------------------------------------------------------------------------
// Rings

namespace {

using EdgeSet = std::vector<std::uint64_t>;

bool eliminate(std::vector<EdgeSet>& basis, std::vector<int>& pivots, EdgeSet v) {
  for (std::size_t i = 0; i < basis.size(); ++i) {
    int p = pivots[i];
    if (v[static_cast<std::size_t>(p / 64)] >> (p % 64) & 1U) {
      for (std::size_t w = 0; w < v.size(); ++w) v[w] ^= basis[i][w];
    }
  }
  for (std::size_t w = 0; w < v.size(); ++w) {
    if (v[w] != 0) {
      int p = static_cast<int>(w * 64) + __builtin_ctzll(v[w]);
      basis.push_back(std::move(v));
      pivots.push_back(p);
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<Ring> find_rings(const MolGraph& g) {
  const int n = g.atom_count();
  const int m = g.bond_count();
  const int target = m - n + g.component_count();
  std::vector<Ring> rings;
  if (target <= 0) return rings;

  // BFS shortest-path trees from every atom.
  std::vector<std::vector<int>> dist(static_cast<std::size_t>(n)),
      parent(static_cast<std::size_t>(n)), parent_bond(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    auto& d = dist[static_cast<std::size_t>(s)];
    auto& p = parent[static_cast<std::size_t>(s)];
    auto& pb = parent_bond[static_cast<std::size_t>(s)];
    d.assign(static_cast<std::size_t>(n), -1);
    p.assign(static_cast<std::size_t>(n), -1);
    pb.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> queue{s};
    d[static_cast<std::size_t>(s)] = 0;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int u = queue[h];
      std::vector<Neighbor> nbrs(g.neighbors(u).begin(), g.neighbors(u).end());
      std::sort(nbrs.begin(), nbrs.end(), [](const Neighbor& a, const Neighbor& b) { return a.atom < b.atom; });
      for (const Neighbor& nb : nbrs) {
        auto v = static_cast<std::size_t>(nb.atom);
        if (d[v] < 0) {
          d[v] = d[static_cast<std::size_t>(u)] + 1;
          p[v] = u;
          pb[v] = nb.bond;
          queue.push_back(nb.atom);
        }
      }
    }
  }

  // Horton candidates: shortest path s->x, edge (x,y), shortest path y->s.
  struct Candidate {
    int length;
    std::vector<int> atoms;
    EdgeSet edges;
  };
  std::vector<Candidate> candidates;
  const std::size_t words = static_cast<std::size_t>((m + 63) / 64);
  std::vector<bool> cyclic = ring_bonds(g);
  auto path = [&](int s, int t, std::vector<int>& atoms, EdgeSet& edges) {
    for (int v = t; v != s; v = parent[static_cast<std::size_t>(s)][static_cast<std::size_t>(v)]) {
      atoms.push_back(v);
      int b = parent_bond[static_cast<std::size_t>(s)][static_cast<std::size_t>(v)];
      edges[static_cast<std::size_t>(b / 64)] ^= std::uint64_t{1} << (b % 64);
    }
  };
  for (int s = 0; s < n; ++s) {
    for (int b = 0; b < m; ++b) {
      if (!cyclic[static_cast<std::size_t>(b)]) continue;
      const Bond& bond = g.bond(b);
      int dx = dist[static_cast<std::size_t>(s)][static_cast<std::size_t>(bond.begin)];
      int dy = dist[static_cast<std::size_t>(s)][static_cast<std::size_t>(bond.end)];
      if (dx < 0 || dy < 0) continue;
      if (parent_bond[static_cast<std::size_t>(s)][static_cast<std::size_t>(bond.begin)] == b ||
          parent_bond[static_cast<std::size_t>(s)][static_cast<std::size_t>(bond.end)] == b) {
        continue;
      }
      std::vector<int> atoms;
      EdgeSet edges(words, 0);
      path(s, bond.begin, atoms, edges);
      path(s, bond.end, atoms, edges);
      atoms.push_back(s);
      std::sort(atoms.begin(), atoms.end());
      if (std::adjacent_find(atoms.begin(), atoms.end()) != atoms.end()) continue;  // paths meet early
      edges[static_cast<std::size_t>(b / 64)] ^= std::uint64_t{1} << (b % 64);
      candidates.push_back({static_cast<int>(atoms.size()), std::move(atoms), std::move(edges)});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.length, a.atoms) < std::tie(b.length, b.atoms);
  });
  std::vector<EdgeSet> basis;
  std::vector<int> pivots;
  for (Candidate& c : candidates) {
    if (static_cast<int>(rings.size()) == target) break;
    if (eliminate(basis, pivots, c.edges)) rings.push_back(Ring{std::move(c.atoms)});
  }
  return rings;
}

}  // namespace polyhappy
