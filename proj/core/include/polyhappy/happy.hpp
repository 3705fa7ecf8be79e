#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "polyhappy/forge.hpp"
#include "polyhappy/molgraph.hpp"

namespace polyhappy {

class HappyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A token with the sideline groups written right after it. Each group is a
// chain: its first unit attaches to this unit, later units to their
// predecessor.
//
// A token is a vocabulary name, optionally followed by "@in" or "@in,out"
// when the unit's port roles differ from the default assignment (in on
// the lowest port id, out on the next lowest, sidelines on the rest in
// ascending order).
struct HappyUnit {
  std::string token;
  std::vector<std::vector<HappyUnit>> sidelines;

  bool operator==(const HappyUnit&) const = default;
};

struct HappyString {
  std::vector<HappyUnit> units;  // mainline, end to end

  bool operator==(const HappyString&) const = default;
};

using TokenSequence = std::vector<std::string>;

TokenSequence flatten(const HappyString& s);
HappyString parse_happy(std::span<const std::string> tokens);
HappyString parse_happy(std::string_view text);
std::string to_text(const TokenSequence& tokens);
std::string to_text(const HappyString& s);

// Splits vocabulary name and port annotation: "G0007@2,1" -> "G0007".
std::string_view base_token(std::string_view token);

HappyString encode(const TiledMonomer& monomer, const Vocabulary& vocab);
HappyString encode(const MonomerTiling& tiling, const Vocabulary& vocab);
HappyString encode(const MolGraph& g, const Vocabulary& vocab);

MolGraph decode(const HappyString& s, const Vocabulary& vocab);

// Atom-level SMILES tokens: bracket atoms, elements, bonds, ring labels
// (including %nn), parentheses and wildcards.
TokenSequence tokenize_smiles(std::string_view text);

}  // namespace polyhappy
