#include "polyhappy/chemfeat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polyhappy/hash.hpp"

namespace polyhappy {

namespace {

struct AtomicData {
  double mass;            // standard atomic weight, g/mol
  int valence_electrons;
  double polarizability;  // static dipole polarizability, cubic angstrom
  double ionization;      // first ionization energy, eV
};

// Indexed by Element. Masses: IUPAC conventional weights. Polarizabilities:
// CRC Handbook atomic values. Ionization energies: NIST ASD.
constexpr std::array<AtomicData, 13> kAtomic{{
    {0.0, 0, 0.0, 0.0},            // *
    {1.008, 1, 0.667, 13.598},     // H
    {10.81, 3, 3.03, 8.298},       // B
    {12.011, 4, 1.76, 11.260},     // C
    {14.007, 5, 1.10, 14.534},     // N
    {15.999, 6, 0.802, 13.618},    // O
    {18.998, 7, 0.557, 17.423},    // F
    {28.085, 4, 5.38, 8.152},      // Si
    {30.974, 5, 3.63, 10.487},     // P
    {32.06, 6, 2.90, 10.360},      // S
    {35.45, 7, 2.18, 12.968},      // Cl
    {79.904, 7, 3.05, 11.814},     // Br
    {126.904, 7, 5.35, 10.451},    // I
}};

const AtomicData& data(Element e) { return kAtomic[static_cast<std::size_t>(e)]; }

constexpr std::array<std::string_view, kDescriptorCount> kNames{
    "mol_weight",
    "heavy_atom_count",
    "ring_count",
    "aromatic_ring_count",
    "six_membered_ring_count",
    "rotatable_bond_count",
    "rigidity",
    "fraction_csp3",
    "sp2_atom_count",
    "double_bond_count",
    "triple_bond_count",
    "nitrogen_count",
    "oxygen_count",
    "sulfur_count",
    "halogen_count",
    "hbond_donor_count",
    "hbond_acceptor_count",
    "valence_electron_adjacency",
    "polarizability_adjacency",
    "mean_ionization_energy",
};

bool is_heavy(const Atom& a) { return !a.is_wildcard() && a.element != Element::kH; }

bool is_halogen(Element e) {
  return e == Element::kF || e == Element::kCl || e == Element::kBr || e == Element::kI;
}

}  // namespace

const std::array<std::string_view, kDescriptorCount>& descriptor_names() { return kNames; }

MolGraph cap_wildcards(const MolGraph& g) {
  MolGraph out;
  std::vector<int> local(static_cast<std::size_t>(g.atom_count()), -1);
  for (int i = 0; i < g.atom_count(); ++i) {
    if (!g.atom(i).is_wildcard()) local[static_cast<std::size_t>(i)] = out.add_atom(g.atom(i));
  }
  for (const Bond& b : g.bonds()) {
    int x = local[static_cast<std::size_t>(b.begin)];
    int y = local[static_cast<std::size_t>(b.end)];
    if (x >= 0 && y >= 0) {
      out.add_bond(x, y, b.order);
    } else if (x >= 0 || y >= 0) {
      ++out.mutable_atom(x >= 0 ? x : y).hydrogens;
    }
  }
  return out;
}

DescriptorVector compute_descriptors(const MolGraph& input) {
  const MolGraph g = cap_wildcards(input);
  DescriptorVector d{};
  std::vector<Ring> rings = find_rings(g);
  std::vector<bool> cyclic = ring_bonds(g);

  double mass = 0.0;
  int heavy = 0, carbons = 0, sp3_carbons = 0, sp2 = 0;
  int n_count = 0, o_count = 0, s_count = 0, halogens = 0, donors = 0, acceptors = 0;
  double ionization = 0.0;
  for (int i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atom(i);
    mass += data(a.element).mass + a.hydrogens * data(Element::kH).mass;
    if (!is_heavy(a)) continue;
    ++heavy;
    ionization += data(a.element).ionization;
    bool has_double = false, has_triple = false;
    for (const Neighbor& nb : g.neighbors(i)) {
      BondOrder o = g.bond(nb.bond).order;
      has_double |= o == BondOrder::kDouble;
      has_triple |= o == BondOrder::kTriple;
    }
    if (a.element == Element::kC) {
      ++carbons;
      if (!a.aromatic && !has_double && !has_triple) ++sp3_carbons;
    }
    if ((a.aromatic || has_double) && !has_triple) ++sp2;
    switch (a.element) {
      case Element::kN:
        ++n_count;
        break;
      case Element::kO:
        ++o_count;
        break;
      case Element::kS:
        ++s_count;
        break;
      default:
        break;
    }
    if (is_halogen(a.element)) ++halogens;
    if (a.element == Element::kN || a.element == Element::kO) {
      ++acceptors;
      if (a.hydrogens > 0) ++donors;
    }
  }

  auto heavy_degree = [&](int i) {
    int deg = 0;
    for (const Neighbor& nb : g.neighbors(i)) deg += is_heavy(g.atom(nb.atom)) ? 1 : 0;
    return deg;
  };
  int rotatable = 0, acyclic = 0, doubles = 0, triples = 0;
  double ve_adj = 0.0, pol_adj = 0.0;
  for (int b = 0; b < g.bond_count(); ++b) {
    const Bond& bond = g.bond(b);
    const Atom& x = g.atom(bond.begin);
    const Atom& y = g.atom(bond.end);
    doubles += bond.order == BondOrder::kDouble ? 1 : 0;
    triples += bond.order == BondOrder::kTriple ? 1 : 0;
    if (!is_heavy(x) || !is_heavy(y)) continue;
    ve_adj += data(x.element).valence_electrons * data(y.element).valence_electrons;
    pol_adj += data(x.element).polarizability * data(y.element).polarizability;
    if (cyclic[static_cast<std::size_t>(b)]) continue;
    ++acyclic;
    if (bond.order == BondOrder::kSingle && heavy_degree(bond.begin) > 1 && heavy_degree(bond.end) > 1) {
      ++rotatable;
    }
  }

  int aromatic_rings = 0, six_rings = 0;
  for (const Ring& r : rings) {
    bool aromatic = std::all_of(r.atoms.begin(), r.atoms.end(), [&](int a) { return g.atom(a).aromatic; });
    aromatic_rings += aromatic ? 1 : 0;
    six_rings += r.size() == 6 ? 1 : 0;
  }

  d[0] = mass;
  d[1] = heavy;
  d[2] = static_cast<double>(rings.size());
  d[3] = aromatic_rings;
  d[4] = six_rings;
  d[5] = rotatable;
  d[6] = acyclic == 0 ? 1.0 : 1.0 - static_cast<double>(rotatable) / acyclic;
  d[7] = carbons == 0 ? 0.0 : static_cast<double>(sp3_carbons) / carbons;
  d[8] = sp2;
  d[9] = doubles;
  d[10] = triples;
  d[11] = n_count;
  d[12] = o_count;
  d[13] = s_count;
  d[14] = halogens;
  d[15] = donors;
  d[16] = acceptors;
  d[17] = ve_adj;
  d[18] = pol_adj;
  d[19] = heavy == 0 ? 0.0 : ionization / heavy;
  return d;
}

DescriptorVector subgroup_descriptors(const Fragment& f) {
  MolGraph capped = f.graph;
  for (const Port& p : f.ports) ++capped.mutable_atom(p.atom).hydrogens;
  return compute_descriptors(capped);
}

ScalerParams fit_scaler(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw StatsError("scaler needs at least one row");
  ScalerParams p{rows.front(), rows.front()};
  for (const auto& row : rows) {
    if (row.size() != p.min.size()) throw StatsError("ragged scaler input");
    for (std::size_t j = 0; j < row.size(); ++j) {
      p.min[j] = std::min(p.min[j], row[j]);
      p.max[j] = std::max(p.max[j], row[j]);
    }
  }
  return p;
}

std::vector<double> apply_scaler(std::span<const double> v, const ScalerParams& p) {
  if (v.size() != p.min.size()) throw StatsError("scaler dimension mismatch");
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    double span = p.max[j] - p.min[j];
    out[j] = span == 0.0 ? 0.0 : (v[j] - p.min[j]) / span;
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw StatsError("pearson needs equal lengths >= 2");
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("undefined correlation: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<int> select_descriptors(std::span<const std::vector<double>> rows,
                                    std::span<const double> target, int k) {
  if (rows.empty()) throw StatsError("empty dataset");
  const std::size_t width = rows.front().size();
  if (k < 0 || static_cast<std::size_t>(k) > width) throw StatsError("k exceeds schema size");
  std::vector<double> strength(width, 0.0);
  std::vector<double> column(rows.size());
  for (std::size_t j = 0; j < width; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i][j];
    try {
      strength[j] = std::abs(pearson(column, target));
    } catch (const StatsError&) {
      strength[j] = 0.0;
    }
  }
  std::vector<int> order(width);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return strength[static_cast<std::size_t>(a)] > strength[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

// ---------------------------------------------------------------------------
// Fingerprints

std::string FingerprintBits::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(kFingerprintBits / 4, '0');
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned nibble = 0;
    for (std::size_t b = 0; b < 4; ++b) nibble |= (bits[i * 4 + b] ? 1U : 0U) << b;
    out[i] = kDigits[nibble];
  }
  return out;
}

FingerprintBits FingerprintBits::from_hex(std::string_view hex) {
  if (hex.size() != kFingerprintBits / 4) throw StatsError("fingerprint hex must have 256 characters");
  FingerprintBits fp;
  for (std::size_t i = 0; i < hex.size(); ++i) {
    char c = hex[i];
    unsigned nibble = 0;
    if (c >= '0' && c <= '9') {
      nibble = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      nibble = static_cast<unsigned>(c - 'a' + 10);
    } else {
      throw StatsError("invalid fingerprint hex digit");
    }
    for (std::size_t b = 0; b < 4; ++b) fp.bits[i * 4 + b] = (nibble >> b) & 1U;
  }
  return fp;
}

std::vector<std::vector<std::uint64_t>> morgan_environments(const MolGraph& g, int radius) {
  const auto n = static_cast<std::size_t>(g.atom_count());
  std::vector<std::vector<std::uint64_t>> ids(static_cast<std::size_t>(radius) + 1,
                                              std::vector<std::uint64_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = g.atom(static_cast<int>(i));
    std::string s = std::string(element_symbol(a.element)) + ';' + std::to_string(a.formal_charge) + ';' +
                    (a.aromatic ? '1' : '0') + ';' + std::to_string(a.hydrogens);
    ids[0][i] = fnv1a64(s);
  }
  for (std::size_t r = 1; r < ids.size(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> parts;
      for (const Neighbor& nb : g.neighbors(static_cast<int>(i))) {
        parts.push_back(std::to_string(static_cast<int>(g.bond(nb.bond).order)) + ':' +
                        to_hex(ids[r - 1][static_cast<std::size_t>(nb.atom)]));
      }
      std::sort(parts.begin(), parts.end());
      std::string s = to_hex(ids[r - 1][i]);
      for (const std::string& p : parts) s += '|' + p;
      ids[r][i] = fnv1a64(s);
    }
  }
  return ids;
}

FingerprintBits morgan_fingerprint(const MolGraph& g, int radius) {
  FingerprintBits fp;
  for (const auto& layer : morgan_environments(g, radius)) {
    for (std::uint64_t id : layer) fp.bits.set(static_cast<std::size_t>(id % kFingerprintBits));
  }
  return fp;
}

double tanimoto(const FingerprintBits& a, const FingerprintBits& b) {
  std::size_t both = (a.bits & b.bits).count();
  std::size_t either = (a.bits | b.bits).count();
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace polyhappy
