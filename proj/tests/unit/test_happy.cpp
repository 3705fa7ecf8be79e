#include <gtest/gtest.h>

#include <random>

#include "polyhappy/happy.hpp"
#include "test_support.hpp"

namespace polyhappy {
namespace {

using testing::corpus_graphs;

Vocabulary styrene_vocab() {
  std::vector<VocabularyEntry> e{
      {"G1", "[1*]C[2*]", 1, 0, 0},
      {"G2", "[1*]C([2*])[3*]", 1, 0, 0},
      {"G3", "[1*]c1ccccc1", 6, 0, 0},
  };
  return Vocabulary(e, 100, "");
}

const ForgeResult& corpus_forge() {
  static const ForgeResult r = forge_run(corpus_graphs(), MiningConfig{5, 50});
  return r;
}

TEST(Encode, StyreneWithSingleFragmentVocabulary) {
  EXPECT_EQ(to_text(encode(parse_smiles("*CC(*)c1ccccc1"), styrene_vocab())), "G1 G2 ( G3 )");
}

TEST(Encode, SingleToken) { EXPECT_EQ(to_text(encode(parse_smiles("*C*"), styrene_vocab())), "G1"); }

TEST(Encode, DirectionAndSpellingDoNotMatter) {
  Vocabulary v = styrene_vocab();
  EXPECT_EQ(encode(parse_smiles("c1ccccc1C(*)C*"), v), encode(parse_smiles("*CC(*)c1ccccc1"), v));
  std::mt19937_64 rng(17);
  const ForgeResult& r = corpus_forge();
  auto corpus = corpus_graphs();
  for (std::size_t m = 0; m < corpus.size(); m += 3) {
    HappyString s = encode(corpus[m], r.vocabulary);
    MolGraph p = permute_atoms(corpus[m], testing::random_permutation(corpus[m].atom_count(), rng));
    EXPECT_EQ(encode(p, r.vocabulary), s) << write_smiles(corpus[m]);
  }
}

TEST(Encode, UncoverableMonomerNamesFragment) {
  try {
    encode(parse_smiles("*CC(*)C(=O)OC"), styrene_vocab());
    FAIL() << "expected an error";
  } catch (const HappyError& e) {
    EXPECT_NE(std::string(e.what()).find("[1*]"), std::string::npos);
  }
}

TEST(Decode, StyreneFromTokens) {
  MolGraph g = decode(parse_happy("G1 G2 ( G3 )"), styrene_vocab());
  EXPECT_TRUE(graph_isomorphic(g, parse_smiles("*CC(*)c1ccccc1")));
}

TEST(Decode, RejectsMalformedStrings) {
  Vocabulary v = styrene_vocab();
  EXPECT_THROW(decode(parse_happy("G3 G3"), v), HappyError);
  EXPECT_THROW(decode(parse_happy("G1 G9"), v), HappyError);
  EXPECT_THROW(parse_happy("G1 G2 ( G3"), HappyError);
  EXPECT_THROW(parse_happy("G1 )"), HappyError);
  EXPECT_THROW(parse_happy("( G1 )"), HappyError);
  EXPECT_THROW(parse_happy(""), HappyError);
  EXPECT_THROW(decode(parse_happy("G1 ( G3 )"), v), HappyError);
  EXPECT_THROW(decode(parse_happy("G1@3 G1"), v), HappyError);
}

TEST(Codec, CorpusRoundTrip) {
  const ForgeResult& r = corpus_forge();
  auto corpus = corpus_graphs();
  for (std::size_t m = 0; m < corpus.size(); ++m) {
    HappyString via_tiling = encode(r.tilings[m], r.vocabulary);
    HappyString via_vocab = encode(corpus[m], r.vocabulary);
    EXPECT_TRUE(graph_isomorphic(decode(via_tiling, r.vocabulary), corpus[m])) << to_text(via_tiling);
    EXPECT_TRUE(graph_isomorphic(decode(via_vocab, r.vocabulary), corpus[m])) << to_text(via_vocab);
    EXPECT_EQ(parse_happy(to_text(via_vocab)), via_vocab);
  }
}

TEST(Codec, HappyIsShorterThanSmiles) {
  const ForgeResult& r = corpus_forge();
  double happy = 0.0, smiles = 0.0;
  auto corpus = corpus_graphs();
  for (std::size_t m = 0; m < corpus.size(); ++m) {
    happy += static_cast<double>(flatten(encode(r.tilings[m], r.vocabulary)).size());
    smiles += static_cast<double>(tokenize_smiles(write_smiles(corpus[m])).size());
  }
  EXPECT_LT(happy, smiles);
}

TEST(Flatten, NestedShapesRoundTrip) {
  for (const std::string text : {"A", "A B ( C ) D", "A ( B ( C D ) E ) ( F ) G ( H )"}) {
    HappyString s = parse_happy(text);
    EXPECT_EQ(to_text(flatten(s)), text);
    EXPECT_EQ(parse_happy(flatten(s)), s);
  }
  HappyString nested = parse_happy("A ( B ( C D ) E ) ( F ) G");
  ASSERT_EQ(nested.units.size(), 2U);
  ASSERT_EQ(nested.units[0].sidelines.size(), 2U);
  EXPECT_EQ(nested.units[0].sidelines[0].size(), 2U);
}

TEST(BaseToken, StripsAnnotation) {
  EXPECT_EQ(base_token("G0007@2,1"), "G0007");
  EXPECT_EQ(base_token("G0007"), "G0007");
}

TEST(TokenizeSmiles, Examples) {
  EXPECT_EQ(tokenize_smiles("CCO"), (TokenSequence{"C", "C", "O"}));
  EXPECT_EQ(tokenize_smiles("c1ccccc1"), (TokenSequence{"c", "1", "c", "c", "c", "c", "c", "1"}));
  EXPECT_EQ(tokenize_smiles("[*]C(Cl)Br"), (TokenSequence{"[*]", "C", "(", "Cl", ")", "Br"}));
  EXPECT_EQ(tokenize_smiles("C%12CC%12").size(), 5U);
  EXPECT_THROW(tokenize_smiles("C$C"), std::exception);
}

}  // namespace
}  // namespace polyhappy
