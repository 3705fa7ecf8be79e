#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polyhappy {

enum class Element : std::uint8_t {
  kWildcard,
  kH,
  kB,
  kC,
  kN,
  kO,
  kF,
  kSi,
  kP,
  kS,
  kCl,
  kBr,
  kI,
};

std::string_view element_symbol(Element e);
std::optional<Element> element_from_symbol(std::string_view symbol);

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

struct Atom {
  Element element = Element::kC;
  int formal_charge = 0;
  bool aromatic = false;
  // Attached hydrogens. Computed from default valences for organic-subset
  // atoms, taken verbatim from bracket atoms.
  int hydrogens = 0;
  // Numbered wildcard label, "[3*]" -> 3. Zero for unlabeled atoms.
  int port_label = 0;

  bool is_wildcard() const { return element == Element::kWildcard; }
  bool operator==(const Atom&) const = default;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::kSingle;

  int other(int atom) const { return atom == begin ? end : begin; }
};

struct Neighbor {
  int atom;
  int bond;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : std::runtime_error("position " + std::to_string(position) + ": " +
                           what),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MolGraph {
 public:
  MolGraph() = default;

  int add_atom(const Atom& atom);
  // Throws GraphError on self loops, duplicate bonds or bad indices.
  int add_bond(int a, int b, BondOrder order);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }
  Atom& mutable_atom(int i) { return atoms_[static_cast<std::size_t>(i)]; }
  const Bond& bond(int i) const { return bonds_[static_cast<std::size_t>(i)]; }
  void set_bond_order(int bond, BondOrder order);

  int atom_count() const { return static_cast<int>(atoms_.size()); }
  int bond_count() const { return static_cast<int>(bonds_.size()); }
  std::span<const Neighbor> neighbors(int atom) const {
    return adjacency_[static_cast<std::size_t>(atom)];
  }
  int degree(int atom) const {
    return static_cast<int>(adjacency_[static_cast<std::size_t>(atom)].size());
  }
  // Index of the bond joining a and b, or -1.
  int find_bond(int a, int b) const;

  int wildcard_count() const;
  int heavy_atom_count() const;  // excludes wildcards and explicit H atoms
  int component_count() const;
  bool connected() const { return component_count() <= 1; }

  const std::optional<std::string>& source_text() const { return source_; }
  void set_source_text(std::string text) { source_ = std::move(text); }

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::optional<std::string> source_;
};

struct ValenceViolation {
  int atom;
  std::string reason;
};

struct ValidityReport {
  std::vector<ValenceViolation> violations;
  bool valid() const { return violations.empty(); }
};

struct Ring {
  std::vector<int> atoms;  // ascending atom indices
  int size() const { return static_cast<int>(atoms.size()); }
};

// Parses the supported SMILES subset. Throws ParseError.
MolGraph parse_smiles(std::string_view text);

ValidityReport check_valence(const MolGraph& g);

// Hydrogen count an organic-subset atom would receive from the default
// valence rules given its current bonds.
int default_implicit_hydrogens(const MolGraph& g, int atom);

// Per-bond flag: true when the bond lies on at least one cycle.
std::vector<bool> ring_bonds(const MolGraph& g);

// rank[i] is the canonical position of atom i (a permutation of 0..n-1).
std::vector<int> canonical_rank(const MolGraph& g);

std::string write_smiles(const MolGraph& g);

bool graph_isomorphic(const MolGraph& a, const MolGraph& b);

// Smallest set of smallest rings.
std::vector<Ring> find_rings(const MolGraph& g);

// Returns a copy with atom i moved to position perm[i].
MolGraph permute_atoms(const MolGraph& g, std::span<const int> perm);

}  // namespace polyhappy
