#include "polyhappy/attribute.hpp"

#include <algorithm>
#include <cmath>

namespace polyhappy {

namespace {

// Neumaier summation so totals do not depend on accumulation noise.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

std::vector<double> integrated_gradients(const ValueFn& /*f*/, const GradientFn& grad, std::span<const double> x,
                                         std::span<const double> baseline, int steps) {
  if (steps < 1) throw AttributionError("steps must be >= 1");
  std::vector<double> b(x.size(), 0.0);
  if (!baseline.empty()) {
    if (baseline.size() != x.size()) throw AttributionError("baseline and input differ in dimension");
    b.assign(baseline.begin(), baseline.end());
  }
  std::vector<CompensatedSum> acc(x.size());
  std::vector<double> point(x.size());
  for (int j = 1; j <= steps; ++j) {
    double alpha = (j - 0.5) / steps;
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = b[i] + alpha * (x[i] - b[i]);
    std::vector<double> g = grad(point);
    if (g.size() != x.size()) throw AttributionError("gradient has the wrong dimension");
    for (std::size_t i = 0; i < x.size(); ++i) acc[i].add(g[i]);
  }
  std::vector<double> ig(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) ig[i] = (x[i] - b[i]) * acc[i].value() / steps;
  return ig;
}

MatrixModel pooled_oracle_model(const PropertyOracle& oracle, int rows) {
  if (rows < 1) throw AttributionError("pooled model needs at least one row");
  const auto n = static_cast<std::size_t>(rows);
  MatrixModel m;
  m.value = [oracle, n](std::span<const double> x) {
    if (x.size() != n * kDescriptorCount) throw AttributionError("matrix has the wrong size");
    DescriptorVector mean{};
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < kDescriptorCount; ++c) mean[c] += x[r * kDescriptorCount + c];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    return oracle.predict(mean);
  };
  DescriptorVector g = oracle.gradient();
  m.gradient = [g, n](std::span<const double> x) {
    if (x.size() != n * kDescriptorCount) throw AttributionError("matrix has the wrong size");
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < kDescriptorCount; ++c) out[r * kDescriptorCount + c] = g[c] / static_cast<double>(n);
    }
    return out;
  };
  return m;
}

AttributionReport attribute_matrix(const MatrixModel& model, std::span<const std::string> tokens,
                                   std::span<const DescriptorVector> rows, int steps) {
  if (rows.empty()) throw AttributionError("no subgroups to attribute");
  if (tokens.size() != rows.size()) throw AttributionError("one token per subgroup row required");
  std::vector<double> x;
  x.reserve(rows.size() * kDescriptorCount);
  for (const auto& r : rows) x.insert(x.end(), r.begin(), r.end());

  AttributionReport rep;
  rep.tokens.assign(tokens.begin(), tokens.end());
  rep.attributions = integrated_gradients(model.value, model.gradient, x, {}, steps);
  std::vector<double> zero(x.size(), 0.0);
  rep.model_delta = model.value(x) - model.value(zero);

  CompensatedSum total;
  std::vector<CompensatedSum> by_descriptor(kDescriptorCount);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    CompensatedSum row;
    for (std::size_t c = 0; c < kDescriptorCount; ++c) {
      double a = rep.attributions[r * kDescriptorCount + c];
      row.add(a);
      by_descriptor[c].add(a);
      total.add(a);
    }
    auto it = std::find_if(rep.subgroup_totals.begin(), rep.subgroup_totals.end(),
                           [&](const NamedValue& v) { return v.name == tokens[r]; });
    if (it == rep.subgroup_totals.end()) {
      rep.subgroup_totals.push_back({tokens[r], row.value()});
    } else {
      it->value += row.value();
    }
  }
  for (std::size_t c = 0; c < kDescriptorCount; ++c) {
    rep.descriptor_totals.push_back({std::string(descriptor_names()[c]), by_descriptor[c].value()});
  }
  rep.completeness_gap = std::abs(total.value() - rep.model_delta);
  return rep;
}

std::vector<DescriptorVector> subgroup_matrix(const TiledMonomer& monomer) {
  std::vector<DescriptorVector> rows;
  for (const Fragment& f : monomer.units) rows.push_back(subgroup_descriptors(f));
  return rows;
}

AttributionReport attribute_monomer(const PropertyOracle& oracle, const TiledMonomer& monomer,
                                    const Vocabulary& vocab, int steps) {
  if (monomer.units.empty()) throw AttributionError("monomer is not tiled");
  std::vector<std::string> tokens;
  for (int e : monomer.entries) {
    if (e < 0 || e >= vocab.size()) throw AttributionError("tile refers to an unknown vocabulary entry");
    tokens.push_back(vocab.entry(e).token);
  }
  std::vector<DescriptorVector> rows = subgroup_matrix(monomer);
  return attribute_matrix(pooled_oracle_model(oracle, static_cast<int>(rows.size())), tokens, rows, steps);
}

nlohmann::json to_json(const AttributionReport& r) {
  nlohmann::json subgroups = nlohmann::json::array();
  for (const auto& v : r.subgroup_totals) subgroups.push_back({{"token", v.name}, {"value", v.value}});
  nlohmann::json descriptors = nlohmann::json::array();
  for (const auto& v : r.descriptor_totals) descriptors.push_back({{"name", v.name}, {"value", v.value}});
  return {{"subgroups", subgroups}, {"descriptors", descriptors}, {"completeness_gap", r.completeness_gap}};
}

}  // namespace polyhappy
