#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyhappy/chemfeat.hpp"
#include "polyhappy/molgraph.hpp"

namespace polyhappy::testing {

inline std::filesystem::path data_dir() { return POLYHAPPY_DATA_DIR; }

// SMILES column of the bundled corpus.
inline std::vector<std::string> corpus_smiles() {
  std::ifstream in(data_dir() / "polymers.csv");
  std::vector<std::string> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line.substr(0, line.find(',')));
  }
  return out;
}

inline std::vector<MolGraph> corpus_graphs() {
  std::vector<MolGraph> out;
  for (const auto& s : corpus_smiles()) out.push_back(parse_smiles(s));
  return out;
}

inline std::vector<MolGraph> parse_all(const std::vector<std::string>& smiles) {
  std::vector<MolGraph> out;
  for (const auto& s : smiles) out.push_back(parse_smiles(s));
  return out;
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(pick(rng))]);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Brute-force oracles. These deliberately avoid the library's metric code.

inline double oracle_tanimoto(const FingerprintBits& a, const FingerprintBits& b) {
  int both = 0, either = 0;
  for (std::size_t i = 0; i < kFingerprintBits; ++i) {
    both += (a.bits[i] && b.bits[i]) ? 1 : 0;
    either += (a.bits[i] || b.bits[i]) ? 1 : 0;
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / either;
}

// Nearest neighbor by exhaustive scan; first maximum wins.
inline std::pair<int, double> oracle_nearest(const FingerprintBits& fp, const std::vector<FingerprintBits>& train) {
  int best = 0;
  double best_sim = oracle_tanimoto(fp, train[0]);
  for (std::size_t t = 1; t < train.size(); ++t) {
    double s = oracle_tanimoto(fp, train[t]);
    if (s > best_sim) {
      best = static_cast<int>(t);
      best_sim = s;
    }
  }
  return {best, best_sim};
}

inline double oracle_diversity(const std::vector<FingerprintBits>& valid) {
  const std::size_t n = valid.size();
  const std::size_t k = std::min<std::size_t>(10, n - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sims;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sims.push_back(oracle_tanimoto(valid[i], valid[j]));
    }
    std::sort(sims.begin(), sims.end());
    std::reverse(sims.begin(), sims.end());
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += 1.0 - sims[j];
    total += s / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

inline double oracle_specificity(const std::vector<FingerprintBits>& valid, const std::vector<FingerprintBits>& train,
                                 std::size_t batch_size) {
  std::vector<int> nn;
  for (const auto& fp : valid) nn.push_back(oracle_nearest(fp, train).first);
  double total = 0.0;
  for (std::size_t i = 0; i < nn.size(); ++i) {
    int shared = 0;
    for (std::size_t j = 0; j < nn.size(); ++j) shared += nn[j] == nn[i] ? 1 : 0;
    total += 1.0 - static_cast<double>(shared) / static_cast<double>(batch_size);
  }
  return total / static_cast<double>(nn.size());
}

// Solves a square system by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// Ordinary least squares with intercept via the augmented normal equations.
// Returns {w_1..w_p, intercept}.
inline std::vector<double> oracle_least_squares(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const std::size_t p = x.front().size() + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0));
  std::vector<double> b(p, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> row = x[i];
    row.push_back(1.0);
    for (std::size_t r = 0; r < p; ++r) {
      b[r] += row[r] * y[i];
      for (std::size_t c = 0; c < p; ++c) a[r][c] += row[r] * row[c];
    }
  }
  return gauss_solve(a, b);
}

}  // namespace polyhappy::testing
