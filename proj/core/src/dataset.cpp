#include "polyhappy/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace polyhappy {

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  if (quoted) throw DatasetError("unterminated quote in CSV row");
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::string repeat_unit_problem(const MolGraph& g) {
  if (g.wildcard_count() != 2) return "expected 2 wildcards, found " + std::to_string(g.wildcard_count());
  if (!g.connected()) return "disconnected graph";
  for (int a = 0; a < g.atom_count(); ++a) {
    if (!g.atom(a).is_wildcard()) continue;
    if (g.degree(a) != 1) return "wildcard must have exactly one bond";
    if (g.bond(g.neighbors(a).front().bond).order != BondOrder::kSingle) return "wildcard bond must be single";
    if (g.atom(g.neighbors(a).front().atom).is_wildcard()) return "wildcards bonded to each other";
  }
  ValidityReport v = check_valence(g);
  if (!v.valid()) return v.violations.front().reason;
  return {};
}

IngestResult ingest_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    header = split_csv_line(line);
    for (std::string& h : header) h = trim(h);
  }
  if (header.empty()) throw DatasetError("empty dataset file");
  auto smiles_col = std::find(header.begin(), header.end(), "smiles");
  if (smiles_col == header.end()) throw DatasetError("missing `smiles` column");
  const auto smiles_idx = static_cast<std::size_t>(smiles_col - header.begin());
  std::vector<std::pair<std::size_t, std::string>> prop_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    for (std::string_view p : kPropertyColumns) {
      if (header[i] == p) prop_cols.emplace_back(i, header[i]);
    }
  }

  IngestResult out;
  std::unordered_map<std::string, int> first_seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    try {
      cells = split_csv_line(line);
    } catch (const DatasetError& e) {
      out.rejects.push_back({line_no, line, e.what()});
      continue;
    }
    if (cells.size() <= smiles_idx) {
      out.rejects.push_back({line_no, line, "row has too few columns"});
      continue;
    }
    DatasetRecord rec;
    rec.smiles = trim(cells[smiles_idx]);
    try {
      MolGraph g = parse_smiles(rec.smiles);
      std::string problem = repeat_unit_problem(g);
      if (!problem.empty()) {
        out.rejects.push_back({line_no, rec.smiles, problem});
        continue;
      }
      rec.canonical = write_smiles(g);
    } catch (const std::exception& e) {
      out.rejects.push_back({line_no, rec.smiles, e.what()});
      continue;
    }
    bool bad_value = false;
    for (const auto& [col, name] : prop_cols) {
      if (col >= cells.size()) continue;
      std::string cell = trim(cells[col]);
      if (cell.empty()) continue;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        out.rejects.push_back({line_no, rec.smiles, "invalid value for " + name + ": " + cell});
        bad_value = true;
        break;
      }
      rec.properties[name] = v;
    }
    if (bad_value) continue;
    auto [it, inserted] = first_seen.emplace(rec.canonical, line_no);
    if (!inserted) {
      out.duplicates.push_back({line_no, it->second, rec.canonical});
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

IngestResult ingest_file(const std::filesystem::path& path) { return ingest_csv(read_file(path)); }

std::string rejects_csv(const IngestResult& r) {
  std::string out = "line,smiles,reason\n";
  for (const auto& x : r.rejects) out += std::to_string(x.line) + ',' + csv_cell(x.smiles) + ',' + csv_cell(x.reason) + '\n';
  return out;
}

std::string records_csv(const std::vector<DatasetRecord>& records) {
  std::vector<std::string> props;
  for (std::string_view p : kPropertyColumns) {
    bool used = std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.properties.contains(std::string(p)); });
    if (used) props.emplace_back(p);
  }
  std::string out = "smiles";
  for (const auto& p : props) out += ',' + p;
  out += '\n';
  for (const auto& r : records) {
    out += csv_cell(r.canonical);
    for (const auto& p : props) {
      out += ',';
      auto it = r.properties.find(p);
      if (it != r.properties.end()) out += format_double(it->second);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::vector<int>> kfold_split(std::size_t n_records, const SplitPlan& plan) {
  if (plan.n_folds < 2) throw DatasetError("n_folds must be >= 2");
  if (plan.n_repeats < 1) throw DatasetError("n_repeats must be >= 1");
  if (n_records < static_cast<std::size_t>(plan.n_folds)) throw DatasetError("fewer records than folds");
  std::vector<std::vector<int>> out;
  for (int rep = 0; rep < plan.n_repeats; ++rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(plan.seed), static_cast<std::uint32_t>(plan.seed >> 32),
                      static_cast<std::uint32_t>(rep)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order(n_records);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Fisher-Yates with rejection sampling, so results do not depend on the
    // standard library's shuffle.
    for (std::size_t i = n_records; i > 1; --i) {
      const std::uint64_t bound = i;
      const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
      std::uint64_t r;
      do {
        r = rng();
      } while (r >= limit);
      std::swap(order[i - 1], order[static_cast<std::size_t>(r % bound)]);
    }
    std::vector<int> folds(n_records);
    for (std::size_t k = 0; k < n_records; ++k) folds[order[k]] = static_cast<int>(k % static_cast<std::size_t>(plan.n_folds));
    out.push_back(std::move(folds));
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DatasetError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace polyhappy
