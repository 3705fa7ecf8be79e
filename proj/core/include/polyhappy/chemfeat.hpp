#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "polyhappy/fragment.hpp"
#include "polyhappy/molgraph.hpp"

namespace polyhappy {

inline constexpr std::size_t kDescriptorCount = 20;
using DescriptorVector = std::array<double, kDescriptorCount>;

// Schema order of DescriptorVector.
const std::array<std::string_view, kDescriptorCount>& descriptor_names();

// Wildcard ends are treated as hydrogen caps.
DescriptorVector compute_descriptors(const MolGraph& g);

// Ports capped with hydrogens, then compute_descriptors.
DescriptorVector subgroup_descriptors(const Fragment& f);

// Copy of g with every wildcard replaced by a hydrogen on its neighbor.
MolGraph cap_wildcards(const MolGraph& g);

struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;
};

ScalerParams fit_scaler(std::span<const std::vector<double>> rows);
// (x - min) / (max - min), 0 for constant columns. Not clamped.
std::vector<double> apply_scaler(std::span<const double> v, const ScalerParams& p);

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sample correlation. Throws StatsError when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// Indices of the k columns with the largest |r| against target; ties keep
// schema order, undefined correlations rank as 0.
std::vector<int> select_descriptors(std::span<const std::vector<double>> rows,
                                    std::span<const double> target, int k);

inline constexpr std::size_t kFingerprintBits = 1024;

struct FingerprintBits {
  std::bitset<kFingerprintBits> bits;

  std::size_t count() const { return bits.count(); }
  bool operator==(const FingerprintBits&) const = default;

  // 256 hex characters, bit 0 in the low nibble of the first character.
  std::string to_hex() const;
  static FingerprintBits from_hex(std::string_view hex);
};

// Per-atom circular environment identifiers: ids[r][atom] for r = 0..radius.
std::vector<std::vector<std::uint64_t>> morgan_environments(const MolGraph& g, int radius);

FingerprintBits morgan_fingerprint(const MolGraph& g, int radius = 2);

double tanimoto(const FingerprintBits& a, const FingerprintBits& b);

}  // namespace polyhappy
