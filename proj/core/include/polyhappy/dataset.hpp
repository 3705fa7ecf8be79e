#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "polyhappy/molgraph.hpp"

namespace polyhappy {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Recognized property columns.
inline constexpr std::string_view kPropertyColumns[] = {"tg_K", "tm_K", "eg_eV", "density_gcc"};

struct DatasetRecord {
  std::string smiles;     // as given
  std::string canonical;  // canonical SMILES
  std::map<std::string, double> properties;
};

struct RejectedRow {
  int line = 0;
  std::string smiles;
  std::string reason;
};

struct DuplicateRow {
  int line = 0;
  int first_line = 0;
  std::string canonical;
};

struct IngestResult {
  std::vector<DatasetRecord> records;
  std::vector<RejectedRow> rejects;
  std::vector<DuplicateRow> duplicates;
};

// Empty string if g is a well-formed repeat unit, else the reason.
std::string repeat_unit_problem(const MolGraph& g);

// Needs a header with a `smiles` column. Blank property cells are absent.
IngestResult ingest_csv(std::string_view text);
IngestResult ingest_file(const std::filesystem::path& path);

std::string rejects_csv(const IngestResult& r);
std::string records_csv(const std::vector<DatasetRecord>& records);

struct SplitPlan {
  int n_folds = 5;
  int n_repeats = 1;
  std::uint64_t seed = 0;
};

// assignments[repeat][record] = fold. Folds differ in size by at most one.
std::vector<std::vector<int>> kfold_split(std::size_t n_records, const SplitPlan& plan);

// Writes to a sibling temporary file, then renames over path.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace polyhappy
