#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyhappy/chemfeat.hpp"
#include "polyhappy/design.hpp"
#include "polyhappy/forge.hpp"

namespace polyhappy {

class AttributionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ValueFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<std::vector<double>(std::span<const double>)>;

// Midpoint-rule path integral from baseline to x. An empty baseline means
// all zeros.
std::vector<double> integrated_gradients(const ValueFn& f, const GradientFn& grad, std::span<const double> x,
                                         std::span<const double> baseline = {}, int steps = 200);

// Model over a row-major (subgroups x descriptors) matrix.
struct MatrixModel {
  ValueFn value;
  GradientFn gradient;
};

// Averages the subgroup rows, then applies the oracle.
MatrixModel pooled_oracle_model(const PropertyOracle& oracle, int rows);

struct NamedValue {
  std::string name;
  double value = 0.0;
};

struct AttributionReport {
  std::vector<std::string> tokens;  // one per subgroup row
  std::vector<double> attributions;  // row-major, rows x kDescriptorCount
  std::vector<NamedValue> subgroup_totals;  // first-appearance order
  std::vector<NamedValue> descriptor_totals;  // schema order
  double model_delta = 0.0;  // f(x) - f(baseline)
  double completeness_gap = 0.0;
};

AttributionReport attribute_matrix(const MatrixModel& model, std::span<const std::string> tokens,
                                   std::span<const DescriptorVector> rows, int steps = 200);

// Per-subgroup descriptor rows of a tiled monomer, one per unit.
std::vector<DescriptorVector> subgroup_matrix(const TiledMonomer& monomer);

AttributionReport attribute_monomer(const PropertyOracle& oracle, const TiledMonomer& monomer,
                                    const Vocabulary& vocab, int steps = 200);

nlohmann::json to_json(const AttributionReport& r);

}  // namespace polyhappy
