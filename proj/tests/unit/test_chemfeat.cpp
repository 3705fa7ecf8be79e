#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polyhappy/chemfeat.hpp"
#include "test_support.hpp"

namespace polyhappy {
namespace {

using testing::corpus_graphs;

int index_of(std::string_view name) {
  const auto& names = descriptor_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  ADD_FAILURE() << "no descriptor " << name;
  return 0;
}

double descriptor(const DescriptorVector& d, std::string_view name) {
  return d[static_cast<std::size_t>(index_of(name))];
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

TEST(Descriptors, Benzene) {
  DescriptorVector d = compute_descriptors(parse_smiles("c1ccccc1"));
  EXPECT_EQ(descriptor(d, "ring_count"), 1.0);
  EXPECT_EQ(descriptor(d, "aromatic_ring_count"), 1.0);
  EXPECT_EQ(descriptor(d, "six_membered_ring_count"), 1.0);
  EXPECT_EQ(descriptor(d, "rotatable_bond_count"), 0.0);
  EXPECT_EQ(descriptor(d, "fraction_csp3"), 0.0);
  EXPECT_EQ(descriptor(d, "sp2_atom_count"), 6.0);
  EXPECT_EQ(descriptor(d, "rigidity"), 1.0);
  EXPECT_NEAR(descriptor(d, "mol_weight"), 78.11, 0.05);
}

TEST(Descriptors, HexaneHasThreeRotatableBonds) {
  DescriptorVector d = compute_descriptors(parse_smiles("CCCCCC"));
  EXPECT_EQ(descriptor(d, "rotatable_bond_count"), 3.0);
  EXPECT_DOUBLE_EQ(descriptor(d, "rigidity"), 1.0 - 3.0 / 5.0);
  EXPECT_EQ(descriptor(d, "fraction_csp3"), 1.0);
}

TEST(Descriptors, SingleAtomHasNoAdjacency) {
  DescriptorVector d = compute_descriptors(parse_smiles("O"));
  EXPECT_EQ(descriptor(d, "valence_electron_adjacency"), 0.0);
  EXPECT_EQ(descriptor(d, "polarizability_adjacency"), 0.0);
  EXPECT_EQ(descriptor(d, "hbond_donor_count"), 1.0);
  EXPECT_EQ(descriptor(d, "hbond_acceptor_count"), 1.0);
}

TEST(Descriptors, HandCountedFunctionalGroups) {
  DescriptorVector d = compute_descriptors(parse_smiles("N#CC(=O)OCCl"));
  EXPECT_EQ(descriptor(d, "triple_bond_count"), 1.0);
  EXPECT_EQ(descriptor(d, "double_bond_count"), 1.0);
  EXPECT_EQ(descriptor(d, "nitrogen_count"), 1.0);
  EXPECT_EQ(descriptor(d, "oxygen_count"), 2.0);
  EXPECT_EQ(descriptor(d, "halogen_count"), 1.0);
  EXPECT_EQ(descriptor(d, "hbond_donor_count"), 0.0);
  EXPECT_EQ(descriptor(d, "hbond_acceptor_count"), 3.0);
  EXPECT_EQ(descriptor(d, "heavy_atom_count"), 7.0);
  // Valence electrons N5 C4 C4 O6 O6 C4 Cl7 over bonds N#C, C-C, C=O, C-O, O-C, C-Cl.
  EXPECT_EQ(descriptor(d, "valence_electron_adjacency"), 5 * 4 + 4 * 4 + 4 * 6 + 4 * 6 + 6 * 4 + 4 * 7);
}

TEST(Descriptors, WildcardsAreHydrogenCaps) {
  EXPECT_EQ(compute_descriptors(parse_smiles("*CC*")), compute_descriptors(parse_smiles("CC")));
  EXPECT_EQ(compute_descriptors(parse_smiles("*c1ccc(*)cc1")), compute_descriptors(parse_smiles("c1ccccc1")));
}

TEST(Descriptors, SubgroupsAreCapped) {
  EXPECT_EQ(subgroup_descriptors(fragment_from_key("[1*]C[2*]")), compute_descriptors(parse_smiles("C")));
  EXPECT_EQ(subgroup_descriptors(fragment_from_key("[1*]c1ccccc1")), compute_descriptors(parse_smiles("c1ccccc1")));
  DescriptorVector acid = subgroup_descriptors(fragment_from_key("[1*]C(=O)O"));
  DescriptorVector formic = compute_descriptors(parse_smiles("OC=O"));
  for (std::size_t j = 0; j < kDescriptorCount; ++j) EXPECT_NEAR(acid[j], formic[j], 1e-12);
}

TEST(Descriptors, PermutationInvariantAndAdditive) {
  std::mt19937_64 rng(23);
  auto corpus = corpus_graphs();
  for (std::size_t m = 0; m < corpus.size(); m += 4) {
    MolGraph p = permute_atoms(corpus[m], testing::random_permutation(corpus[m].atom_count(), rng));
    DescriptorVector a = compute_descriptors(corpus[m]);
    DescriptorVector b = compute_descriptors(p);
    for (std::size_t j = 0; j < kDescriptorCount; ++j) EXPECT_NEAR(a[j], b[j], 1e-9) << descriptor_names()[j];
  }
  DescriptorVector x = compute_descriptors(parse_smiles("CCO"));
  DescriptorVector y = compute_descriptors(parse_smiles("c1ccccc1"));
  DescriptorVector xy = compute_descriptors(parse_smiles("CCO.c1ccccc1"));
  for (const char* name : {"valence_electron_adjacency", "polarizability_adjacency"}) {
    EXPECT_NEAR(descriptor(xy, name), descriptor(x, name) + descriptor(y, name), 1e-9);
  }
}

TEST(Scaler, Examples) {
  std::vector<std::vector<double>> rows{{2, 5}, {4, 5}, {6, 5}};
  ScalerParams p = fit_scaler(rows);
  EXPECT_EQ(apply_scaler(std::vector<double>{2, 5}, p), (std::vector<double>{0, 0}));
  EXPECT_EQ(apply_scaler(std::vector<double>{4, 5}, p), (std::vector<double>{0.5, 0}));
  EXPECT_EQ(apply_scaler(std::vector<double>{6, 5}, p), (std::vector<double>{1, 0}));
  EXPECT_EQ(apply_scaler(std::vector<double>{0, 9}, p)[0], -0.5);
  EXPECT_THROW(apply_scaler(std::vector<double>{1}, p), StatsError);
}

TEST(Scaler, FittedInputsLieInUnitInterval) {
  std::vector<std::vector<double>> rows;
  for (const MolGraph& g : corpus_graphs()) {
    DescriptorVector d = compute_descriptors(g);
    rows.emplace_back(d.begin(), d.end());
  }
  ScalerParams p = fit_scaler(rows);
  for (const auto& r : rows) {
    for (double v : apply_scaler(r, p)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Pearson, Examples) {
  std::vector<double> x{1, 2, 3};
  EXPECT_NEAR(pearson(x, std::vector<double>{2, 4, 6}), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, std::vector<double>{-1, -2, -3}), -1.0, 1e-15);
  EXPECT_NEAR(pearson(x, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
  EXPECT_THROW(pearson(x, std::vector<double>{1, 1, 1}), StatsError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), StatsError);
}

TEST(SelectDescriptors, OrdersByAbsoluteCorrelation) {
  // Column 0 r=0.5, column 1 r=-1, column 2 constant, column 3 r=1.
  std::vector<double> target{1, 2, 3};
  std::vector<std::vector<double>> rows{{1, 3, 7, 10}, {3, 2, 7, 20}, {2, 1, 7, 30}};
  EXPECT_EQ(select_descriptors(rows, target, 4), (std::vector<int>{1, 3, 0, 2}));
  EXPECT_EQ(select_descriptors(rows, target, 1), (std::vector<int>{1}));
  EXPECT_THROW(select_descriptors(rows, target, 5), StatsError);
}

TEST(Fingerprint, MethaneBitsMatchHandHashedEnvironments) {
  FingerprintBits fp = morgan_fingerprint(parse_smiles("C"));
  std::uint64_t r0 = fnv1a("C;0;0;4");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(r0));
  std::uint64_t r1 = fnv1a(buf);
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(r1));
  std::uint64_t r2 = fnv1a(buf);
  FingerprintBits expected;
  for (std::uint64_t h : {r0, r1, r2}) expected.bits.set(h % kFingerprintBits);
  EXPECT_EQ(fp, expected);
  EXPECT_GE(fp.count(), 1U);
}

TEST(Fingerprint, SpellingAndRelabelingInvariant) {
  EXPECT_EQ(morgan_fingerprint(parse_smiles("OCC")), morgan_fingerprint(parse_smiles("CCO")));
  std::mt19937_64 rng(31);
  for (const MolGraph& g : corpus_graphs()) {
    MolGraph p = permute_atoms(g, testing::random_permutation(g.atom_count(), rng));
    ASSERT_EQ(morgan_fingerprint(p), morgan_fingerprint(g));
  }
}

TEST(Fingerprint, BenzeneDiffersFromCyclohexane) {
  EXPECT_NE(morgan_fingerprint(parse_smiles("c1ccccc1")), morgan_fingerprint(parse_smiles("C1CCCCC1")));
}

TEST(Fingerprint, HexRoundTrip) {
  FingerprintBits fp;
  fp.bits.set(0);
  fp.bits.set(5);
  fp.bits.set(1023);
  std::string hex = fp.to_hex();
  ASSERT_EQ(hex.size(), 256U);
  EXPECT_EQ(hex.front(), '1');
  EXPECT_EQ(hex[1], '2');
  EXPECT_EQ(hex.back(), '8');
  EXPECT_EQ(FingerprintBits::from_hex(hex), fp);
  EXPECT_THROW(FingerprintBits::from_hex("12"), StatsError);
}

TEST(Tanimoto, Examples) {
  FingerprintBits a, b, c;
  EXPECT_EQ(tanimoto(a, b), 1.0);
  a.bits.set(1);
  a.bits.set(2);
  a.bits.set(3);
  b.bits.set(2);
  b.bits.set(3);
  b.bits.set(4);
  EXPECT_EQ(tanimoto(a, b), 0.5);
  EXPECT_EQ(tanimoto(a, a), 1.0);
  c.bits.set(9);
  EXPECT_EQ(tanimoto(a, c), 0.0);
}

TEST(Tanimoto, MatchesBruteForceOnCorpus) {
  auto corpus = corpus_graphs();
  std::vector<FingerprintBits> fps;
  for (std::size_t m = 0; m < corpus.size(); m += 9) fps.push_back(morgan_fingerprint(corpus[m]));
  for (const auto& x : fps) {
    for (const auto& y : fps) {
      double t = tanimoto(x, y);
      EXPECT_EQ(t, testing::oracle_tanimoto(x, y));
      EXPECT_EQ(t, tanimoto(y, x));
      EXPECT_GE(t, 0.0);
      EXPECT_LE(t, 1.0);
    }
  }
}

}  // namespace
}  // namespace polyhappy
