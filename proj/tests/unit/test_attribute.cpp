#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "polyhappy/attribute.hpp"
#include "polyhappy/happy.hpp"
#include "test_support.hpp"

namespace polyhappy {
namespace {

TEST(IntegratedGradients, LinearModelIsExact) {
  std::vector<double> w{0.5, -2.0, 3.25, 0.0};
  std::vector<double> x{4.0, 1.5, -2.0, 7.0};
  ValueFn f = [&](std::span<const double> v) { return std::inner_product(w.begin(), w.end(), v.begin(), 1.0); };
  GradientFn g = [&](std::span<const double>) { return w; };
  std::vector<double> a = integrated_gradients(f, g, x);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(a[i], w[i] * x[i], 1e-9);
    total += a[i];
  }
  EXPECT_NEAR(total, f(x) - f(std::vector<double>(4, 0.0)), 1e-9);
}

TEST(IntegratedGradients, QuadraticAtTwoGivesFour) {
  ValueFn f = [](std::span<const double> v) { return v[0] * v[0]; };
  GradientFn g = [](std::span<const double> v) { return std::vector<double>{2 * v[0]}; };
  std::vector<double> a = integrated_gradients(f, g, std::vector<double>{2.0});
  EXPECT_NEAR(a[0], 4.0, 1e-4);
}

TEST(IntegratedGradients, CompletenessForSmoothNonlinearModel) {
  ValueFn f = [](std::span<const double> v) { return std::sin(v[0]) * std::exp(v[1]) + v[0] * v[1] * v[1]; };
  GradientFn g = [](std::span<const double> v) {
    return std::vector<double>{std::cos(v[0]) * std::exp(v[1]) + v[1] * v[1],
                               std::sin(v[0]) * std::exp(v[1]) + 2 * v[0] * v[1]};
  };
  std::vector<double> x{1.2, 0.7}, base{-0.3, 0.1};
  std::vector<double> a = integrated_gradients(f, g, x, base, 200);
  EXPECT_LE(std::abs(a[0] + a[1] - (f(x) - f(base))), 1e-4);
}

TEST(IntegratedGradients, DoublingStepsNeverWidensGap) {
  ValueFn f = [](std::span<const double> v) { return std::exp(0.5 * v[0]) + std::cos(v[1]) * v[0]; };
  GradientFn g = [](std::span<const double> v) {
    return std::vector<double>{0.5 * std::exp(0.5 * v[0]) + std::cos(v[1]), -std::sin(v[1]) * v[0]};
  };
  std::vector<double> x{2.0, 1.1};
  double target = f(x) - f(std::vector<double>{0.0, 0.0});
  double prev = INFINITY;
  for (int steps = 1; steps <= 512; steps *= 2) {
    std::vector<double> a = integrated_gradients(f, g, x, {}, steps);
    double gap = std::abs(a[0] + a[1] - target);
    EXPECT_LE(gap, prev) << steps;
    prev = gap;
  }
}

TEST(IntegratedGradients, RejectsBadArguments) {
  ValueFn f = [](std::span<const double>) { return 0.0; };
  GradientFn g = [](std::span<const double> v) { return std::vector<double>(v.size(), 0.0); };
  EXPECT_THROW(integrated_gradients(f, g, std::vector<double>{1.0}, {}, 0), AttributionError);
  EXPECT_THROW(integrated_gradients(f, g, std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), AttributionError);
}

PropertyOracle toy_oracle() {
  PropertyOracle o;
  o.property_name = "toy";
  o.selected = {0, 2, 12};
  o.weights = {1.5, -4.0, 2.0};
  o.bias = 3.0;
  o.scaler.min.assign(kDescriptorCount, 0.0);
  o.scaler.max.assign(kDescriptorCount, 1.0);
  o.scaler.max[0] = 200.0;
  o.scaler.max[2] = 3.0;
  o.scaler.min[12] = 1.0;
  o.scaler.max[12] = 5.0;
  return o;
}

TEST(AttributeMonomer, PooledOracleCompleteness) {
  Vocabulary v(std::vector<VocabularyEntry>{{"G1", "[1*]C[2*]", 1, 0, 0},
                                            {"G2", "[1*]C([2*])[3*]", 1, 0, 0},
                                            {"G3", "[1*]C(=O)OC", 4, 0, 0},
                                            {"G4", "[1*]c1ccccc1", 6, 0, 0}},
               100, "");
  PropertyOracle o = toy_oracle();
  for (const char* s : {"*CC(*)c1ccccc1", "*CC(*)C(=O)OC"}) {
    TiledMonomer m = tile_view(tile_with_vocabulary(parse_smiles(s), v));
    AttributionReport r = attribute_monomer(o, m, v);
    EXPECT_LE(std::abs(r.completeness_gap), 1e-9) << s;
    double total = 0.0;
    for (const auto& t : r.subgroup_totals) total += t.value;
    EXPECT_NEAR(total, r.model_delta, 1e-9);
    ASSERT_EQ(r.descriptor_totals.size(), kDescriptorCount);
    // Unselected descriptors receive nothing.
    EXPECT_EQ(r.descriptor_totals[1].value, 0.0);
    nlohmann::json j = to_json(r);
    EXPECT_EQ(j["descriptors"].size(), kDescriptorCount);
  }
}

TEST(AttributeMonomer, GradientOfPooledMeanIsWeightOverSpanAndRows) {
  PropertyOracle o = toy_oracle();
  MatrixModel m = pooled_oracle_model(o, 4);
  std::vector<double> x(4 * kDescriptorCount, 1.0);
  std::vector<double> g = m.gradient(x);
  EXPECT_DOUBLE_EQ(g[0], 1.5 / 200.0 / 4.0);
  EXPECT_DOUBLE_EQ(g[kDescriptorCount + 2], -4.0 / 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(g[2 * kDescriptorCount + 12], 2.0 / 4.0 / 4.0);
  EXPECT_EQ(g[5], 0.0);
}

TEST(AttributeMatrix, TotalsFollowFirstAppearance) {
  PropertyOracle o = toy_oracle();
  std::vector<std::string> tokens{"B", "A", "B"};
  std::vector<DescriptorVector> rows(3);
  rows[0][0] = 100;
  rows[1][0] = 50;
  rows[2][2] = 3;
  AttributionReport r = attribute_matrix(pooled_oracle_model(o, 3), tokens, rows);
  ASSERT_EQ(r.subgroup_totals.size(), 2U);
  EXPECT_EQ(r.subgroup_totals[0].name, "B");
  EXPECT_EQ(r.subgroup_totals[1].name, "A");
  EXPECT_NEAR(r.subgroup_totals[1].value, 1.5 * 50 / 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.subgroup_totals[0].value, 1.5 * 100 / 200.0 / 3.0 - 4.0 / 3.0, 1e-12);
}

}  // namespace
}  // namespace polyhappy
