#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "polyhappy/dataset.hpp"
#include "test_support.hpp"

namespace polyhappy {
namespace {

TEST(Ingest, ThreeValidRows) {
  IngestResult r = ingest_csv("smiles,tg_K\n*CC*,195\n*CC(*)c1ccccc1,373\n*CC(*)Cl,354\n");
  ASSERT_EQ(r.records.size(), 3U);
  EXPECT_TRUE(r.rejects.empty());
  EXPECT_EQ(r.records[1].properties.at("tg_K"), 373.0);
}

TEST(Ingest, InvalidRowIsRejected) {
  IngestResult r = ingest_csv("smiles\r\n*CC*\r\n*CC(*\r\n*OCC*\r\n");
  EXPECT_EQ(r.records.size(), 2U);
  ASSERT_EQ(r.rejects.size(), 1U);
  EXPECT_EQ(r.rejects[0].line, 3);
  EXPECT_NE(rejects_csv(r).find("*CC(*"), std::string::npos);
}

TEST(Ingest, RepeatUnitRules) {
  IngestResult r = ingest_csv("smiles\nCCO\n*CC(*)C*\n**\n*C=*\n*CC*\n");
  EXPECT_EQ(r.records.size(), 1U);
  EXPECT_EQ(r.rejects.size(), 4U);
}

TEST(Ingest, DuplicatesByCanonicalForm) {
  IngestResult r = ingest_csv("smiles,density_gcc\n*CC(*)c1ccccc1,1.05\nc1ccccc1C(*)C*,1.04\n");
  ASSERT_EQ(r.records.size(), 1U);
  ASSERT_EQ(r.duplicates.size(), 1U);
  EXPECT_EQ(r.duplicates[0].first_line, 2);
  EXPECT_EQ(r.duplicates[0].line, 3);
}

TEST(Ingest, QuotedCellsAndBlankProperties) {
  IngestResult r = ingest_csv("name,smiles,tm_K\n\"poly, ethylene\",*CC*,\n\"x\"\"y\",*OCC*,338\n");
  ASSERT_EQ(r.records.size(), 2U);
  EXPECT_TRUE(r.records[0].properties.empty());
  EXPECT_EQ(r.records[1].properties.at("tm_K"), 338.0);
  IngestResult bad = ingest_csv("smiles,tm_K\n*CC*,hot\n");
  EXPECT_EQ(bad.rejects.size(), 1U);
}

TEST(Ingest, HeaderErrors) {
  EXPECT_THROW(ingest_csv(""), DatasetError);
  EXPECT_THROW(ingest_csv("name,tg_K\nx,1\n"), DatasetError);
}

TEST(Ingest, BundledCorpus) {
  IngestResult r = ingest_file(testing::data_dir() / "polymers.csv");
  EXPECT_GE(r.records.size(), 200U);
  EXPECT_TRUE(r.rejects.empty());
  IngestResult again = ingest_csv(records_csv(r.records));
  EXPECT_EQ(again.records.size(), r.records.size());
}

TEST(KfoldSplit, TenRecordsFiveFolds) {
  auto a = kfold_split(10, {5, 1, 42});
  ASSERT_EQ(a.size(), 1U);
  std::vector<int> sizes(5, 0);
  for (int f : a[0]) ++sizes[static_cast<std::size_t>(f)];
  EXPECT_EQ(sizes, (std::vector<int>(5, 2)));
  EXPECT_EQ(kfold_split(10, {5, 1, 42}), a);
}

TEST(KfoldSplit, SizesBalancedAndRepeatsDiffer) {
  auto a = kfold_split(23, {5, 3, 7});
  ASSERT_EQ(a.size(), 3U);
  for (const auto& rep : a) {
    std::vector<int> sizes(5, 0);
    for (int f : rep) ++sizes[static_cast<std::size_t>(f)];
    auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    EXPECT_LE(*hi - *lo, 1);
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), 0), 23);
  }
  EXPECT_NE(a[0], a[1]);
  EXPECT_THROW(kfold_split(3, {5, 1, 0}), DatasetError);
  EXPECT_THROW(kfold_split(10, {1, 1, 0}), DatasetError);
}

TEST(AtomicWrite, ReplacesContentWithoutLeavingTemporaries) {
  auto dir = std::filesystem::temp_directory_path() / "polyhappy_atomic_write";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto path = dir / "out.json";
  atomic_write(path, "first");
  atomic_write(path, "second");
  EXPECT_EQ(read_file(path), "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1U);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(read_file(dir / "missing"), DatasetError);
}

}  // namespace
}  // namespace polyhappy
