#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "polyhappy/fragment.hpp"
#include "test_support.hpp"

namespace polyhappy {
namespace {

using testing::corpus_graphs;

Fragment fragment_with_key(const FragmentTree& t, const std::string& key) {
  for (const Fragment& f : t.fragments) {
    if (f.key == key) return f;
  }
  ADD_FAILURE() << "no fragment " << key;
  return {};
}

TEST(FragmentAcyclic, StyreneSplitsIntoThree) {
  FragmentTree t = fragment_acyclic(parse_smiles("*CC(*)c1ccccc1"));
  ASSERT_EQ(t.fragments.size(), 3U);
  EXPECT_EQ(t.edges.size(), 2U);
  std::vector<std::string> keys;
  for (const Fragment& f : t.fragments) keys.push_back(f.key);
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(keys, (std::vector<std::string>{"[1*]C([2*])[3*]", "[1*]C[2*]", "[1*]c1ccccc1"}));
  EXPECT_EQ(fragment_with_key(t, "[1*]C([2*])[3*]").port_count(), 3);
}

TEST(FragmentAcyclic, SingleCarbonHasNothingToCut) {
  FragmentTree t = fragment_acyclic(parse_smiles("*C*"));
  ASSERT_EQ(t.fragments.size(), 1U);
  EXPECT_TRUE(t.edges.empty());
  EXPECT_EQ(t.fragments[0].key, "[1*]C[2*]");
  EXPECT_EQ(t.ends[0].node, 0);
  EXPECT_EQ(t.ends[1].node, 0);
}

TEST(FragmentAcyclic, RingBondsAreNeverCut) {
  FragmentTree t = fragment_acyclic(parse_smiles("*c1ccc(*)cc1"));
  ASSERT_EQ(t.fragments.size(), 1U);
  EXPECT_EQ(t.fragments[0].port_count(), 2);
  FragmentTree fused = fragment_acyclic(parse_smiles("*c1ccc2cc(*)ccc2c1"));
  EXPECT_EQ(fused.fragments.size(), 1U);
}

TEST(FragmentAcyclic, MultipleBondsStayInside) {
  FragmentTree t = fragment_acyclic(parse_smiles("*C=CC(*)C#N"));
  // C=C stays, C-C cut, C-C#N cut.
  EXPECT_EQ(t.fragments.size(), 3U);
}

TEST(FragmentAcyclic, RejectsMalformedRepeatUnits) {
  EXPECT_THROW(fragment_acyclic(parse_smiles("*CC")), FragmentError);
  EXPECT_THROW(fragment_acyclic(parse_smiles("*CC(*)C*")), FragmentError);
  EXPECT_THROW(fragment_acyclic(parse_smiles("*C.C*")), FragmentError);
}

TEST(FragmentAcyclic, CutsExactlyTheAcyclicSingleBonds) {
  for (const MolGraph& g : corpus_graphs()) {
    FragmentTree t = fragment_acyclic(g);
    std::vector<int> cut = t.edge_bonds;
    std::sort(cut.begin(), cut.end());
    std::vector<int> expected = cuttable_bonds(g);
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(cut, expected);
    EXPECT_EQ(t.fragments.size(), t.edges.size() + 1);
    std::vector<bool> cyclic = ring_bonds(g);
    for (int b : expected) {
      const Bond& bond = g.bond(b);
      EXPECT_EQ(bond.order, BondOrder::kSingle);
      EXPECT_FALSE(cyclic[static_cast<std::size_t>(b)]);
      EXPECT_FALSE(g.atom(bond.begin).is_wildcard() || g.atom(bond.end).is_wildcard());
    }
  }
}

TEST(FragmentAcyclic, ReassemblyIsIsomorphic) {
  for (const MolGraph& g : corpus_graphs()) {
    FragmentTree t = fragment_acyclic(g);
    EXPECT_TRUE(graph_isomorphic(reassemble(t), g)) << write_smiles(g);
  }
}

TEST(LocateMainline, PathWithOneSideline) {
  // A-B-C-D, ends on A and D, E hangs off B.
  std::vector<TreeLink> links{
      {{0, 2}, {1, 1}},
      {{1, 2}, {2, 1}},
      {{2, 2}, {3, 1}},
      {{1, 3}, {4, 1}},
  };
  std::array<PortRef, 2> ends{PortRef{0, 1}, PortRef{3, 2}};
  MainlineDecomposition d = locate_mainline(5, links, ends);
  EXPECT_EQ(d.mainline, (std::vector<int>{0, 1, 2, 3}));
  ASSERT_EQ(d.sidelines.size(), 1U);
  ASSERT_EQ(d.sidelines.at(1).size(), 1U);
  const Sideline& s = d.sidelines.at(1)[0];
  EXPECT_EQ(s.host_port, 3);
  EXPECT_EQ(s.node, 4);
  EXPECT_EQ(s.attach_port, 1);
  EXPECT_TRUE(s.children.empty());
  EXPECT_EQ(d.mainline_ports[1], (std::array<int, 2>{1, 2}));
}

TEST(LocateMainline, BothEndsInOneFragment) {
  FragmentTree t = fragment_acyclic(parse_smiles("*c1ccc(*)cc1OCC"));
  MainlineDecomposition d = locate_mainline(t);
  ASSERT_EQ(d.mainline.size(), 1U);
  int sideline_nodes = 0;
  std::function<void(const Sideline&)> count = [&](const Sideline& s) {
    ++sideline_nodes;
    for (const auto& c : s.children) count(c);
  };
  for (const auto& [host, list] : d.sidelines) {
    for (const auto& s : list) count(s);
  }
  EXPECT_EQ(sideline_nodes, static_cast<int>(t.fragments.size()) - 1);
}

TEST(LocateMainline, StyreneBackboneAndPhenylSideline) {
  FragmentTree t = fragment_acyclic(parse_smiles("*CC(*)c1ccccc1"));
  MainlineDecomposition d = locate_mainline(t);
  ASSERT_EQ(d.mainline.size(), 2U);
  std::set<std::string> main_keys;
  for (int n : d.mainline) main_keys.insert(t.fragments[static_cast<std::size_t>(n)].key);
  EXPECT_EQ(main_keys, (std::set<std::string>{"[1*]C([2*])[3*]", "[1*]C[2*]"}));
  ASSERT_EQ(d.sidelines.size(), 1U);
  const auto& [host, list] = *d.sidelines.begin();
  EXPECT_EQ(t.fragments[static_cast<std::size_t>(host)].key, "[1*]C([2*])[3*]");
  ASSERT_EQ(list.size(), 1U);
  EXPECT_EQ(t.fragments[static_cast<std::size_t>(list[0].node)].key, "[1*]c1ccccc1");
}

TEST(LocateMainline, InvariantUnderNodeRenumbering) {
  std::mt19937_64 rng(5);
  auto corpus = corpus_graphs();
  for (std::size_t m = 0; m < corpus.size(); m += 5) {
    FragmentTree t = fragment_acyclic(corpus[m]);
    const int n = static_cast<int>(t.fragments.size());
    MainlineDecomposition d = locate_mainline(t);
    std::vector<int> perm = testing::random_permutation(n, rng);
    std::vector<TreeLink> links;
    for (const TreeLink& l : t.edges) {
      links.push_back({{perm[static_cast<std::size_t>(l.a.node)], l.a.port},
                       {perm[static_cast<std::size_t>(l.b.node)], l.b.port}});
    }
    std::reverse(links.begin(), links.end());
    std::array<PortRef, 2> ends{PortRef{perm[static_cast<std::size_t>(t.ends[0].node)], t.ends[0].port},
                                PortRef{perm[static_cast<std::size_t>(t.ends[1].node)], t.ends[1].port}};
    MainlineDecomposition p = locate_mainline(n, links, ends);
    ASSERT_EQ(p.mainline.size(), d.mainline.size());
    for (std::size_t i = 0; i < d.mainline.size(); ++i) {
      EXPECT_EQ(p.mainline[i], perm[static_cast<std::size_t>(d.mainline[i])]);
      EXPECT_EQ(p.mainline_ports[i], d.mainline_ports[i]);
    }
  }
}

TEST(CanonicalFragmentKey, SameSubgraphSameKey) {
  FragmentTree a = fragment_acyclic(parse_smiles("*CC(*)c1ccccc1"));
  FragmentTree b = fragment_acyclic(parse_smiles("*CC(*)C(=O)OC"));
  EXPECT_EQ(fragment_with_key(a, "[1*]C[2*]").key, fragment_with_key(b, "[1*]C[2*]").key);
}

TEST(CanonicalFragmentKey, PortPatternsDiffer) {
  std::string mono = fragment_acyclic(parse_smiles("*CC(*)c1ccccc1")).fragments[2].key;
  std::string para = fragment_acyclic(parse_smiles("*c1ccc(*)cc1")).fragments[0].key;
  std::string ortho = fragment_acyclic(parse_smiles("*c1ccccc1*")).fragments[0].key;
  EXPECT_NE(mono, para);
  EXPECT_NE(para, ortho);
  EXPECT_EQ(para, "[1*]c1ccc([2*])cc1");
}

TEST(CanonicalFragmentKey, KeyRoundTrips) {
  for (const MolGraph& g : corpus_graphs()) {
    for (const Fragment& f : fragment_acyclic(g).fragments) {
      Fragment back = fragment_from_key(f.key);
      EXPECT_EQ(back.key, f.key);
      EXPECT_EQ(canonical_fragment_key(back), f.key);
      EXPECT_EQ(back.port_count(), f.port_count());
    }
  }
}

}  // namespace
}  // namespace polyhappy
