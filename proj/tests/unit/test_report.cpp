#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "qcal/report.hpp"
#include "qcal/synth.hpp"
#include "support/oracles.hpp"

using namespace qcal;
using qcal::testing::random_matrix;

TEST(LogGrid, EndpointsAndSpacing) {
  const auto g = log_grid(1e-8, 1e3, 25);
  ASSERT_EQ(g.size(), 25u);
  EXPECT_EQ(g.front(), 1e-8);
  EXPECT_EQ(g.back(), 1e3);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_GT(g[i], g[i - 1]);
    EXPECT_NEAR(std::log10(g[i] / g[i - 1]), 11.0 / 24.0, 1e-12);
  }
  EXPECT_EQ(log_grid(2.0, 2.0, 1), std::vector<double>{2.0});
  EXPECT_THROW(log_grid(0.0, 1.0, 3), std::invalid_argument);
  EXPECT_THROW(log_grid(2.0, 1.0, 3), std::invalid_argument);
}

TEST(Distribution, IdenticalTensors) {
  const Matrix w = random_matrix(8, 8, 1);
  const DistributionComparison c = distribution_summary(w, w);
  EXPECT_EQ(c.before.histogram, c.after.histogram);
  EXPECT_EQ(c.before.std, c.after.std);
  EXPECT_EQ(std::accumulate(c.before.histogram.begin(), c.before.histogram.end(), std::size_t{0}), 64u);
  EXPECT_EQ(c.before.histogram.size(), kHistogramBins);
  EXPECT_GT(c.before.histogram.front(), 0u);
  EXPECT_GT(c.before.histogram.back(), 0u);
}

TEST(Distribution, HalvedTensorHasHalfStd) {
  const Matrix w = random_matrix(10, 10, 2);
  const DistributionComparison c = distribution_summary(w, 0.5 * w);
  EXPECT_NEAR(c.after.std, 0.5 * c.before.std, 1e-12);
  EXPECT_NEAR(c.after.mean, 0.5 * c.before.mean, 1e-12);
  EXPECT_EQ(c.range_lo, c.before.min);
  EXPECT_EQ(c.range_hi, c.before.max);
  EXPECT_EQ(std::accumulate(c.after.histogram.begin(), c.after.histogram.end(), std::size_t{0}), 100u);
}

TEST(Distribution, ConstantTensorsLandInFirstBin) {
  const DistributionComparison c = distribution_summary(Matrix(2, 2, 1.0), Matrix(1, 3, 1.0));
  EXPECT_EQ(c.before.histogram[0], 4u);
  EXPECT_EQ(c.after.histogram[0], 3u);
  EXPECT_EQ(c.before.std, 0.0);
}

TEST(Occupancy, UniformDataFillsEveryLevel) {
  // [-1, 0.75] at 3 bits gives scale 0.25 and zero point 0 exactly.
  std::vector<double> v(800);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -1.0 + 1.75 * static_cast<double>(i) / 799.0;
  const OccupancyComparison c = occupancy_compare(Matrix(8, 100, v), 3, 3.0);
  EXPECT_EQ(c.minmax_occupancy.size(), 8u);
  EXPECT_EQ(sparse_levels(c.minmax_occupancy, 0.05), 0u);
  EXPECT_EQ(c.minmax_params, c.clipped_params);
  EXPECT_DOUBLE_EQ(c.minmax_mse, c.clipped_mse);
}

TEST(Occupancy, HeavyTailsLeaveLevelsSparse) {
  const OccupancyComparison c = occupancy_compare(make_fig2_weights({}, 0), 3, 3.0);
  const auto total = [](const std::vector<std::size_t>& o) {
    return std::accumulate(o.begin(), o.end(), std::size_t{0});
  };
  EXPECT_EQ(total(c.minmax_occupancy), 64u * 64u);
  EXPECT_EQ(total(c.clipped_occupancy), 64u * 64u);
  EXPECT_GE(sparse_levels(c.minmax_occupancy, 0.01), 5u);
  EXPECT_LT(sparse_levels(c.clipped_occupancy, 0.01), sparse_levels(c.minmax_occupancy, 0.01));
  EXPECT_LT(c.clipped_params.scale[0], c.minmax_params.scale[0]);
}

TEST(SparseLevels, CountsStrictlyBelowFraction) {
  const std::vector<std::size_t> occ{0, 1, 9, 90};
  EXPECT_EQ(sparse_levels(occ, 0.01), 1u);
  EXPECT_EQ(sparse_levels(occ, 0.05), 2u);
  EXPECT_EQ(sparse_levels(occ, 0.10), 3u);
}

TEST(Sweep, WellConditionedIsMonotone) {
  LayerSnapshot l{"fc", random_matrix(4, 6, 3, 0.5), {0.1, 0.2, 0.3, 0.4}};
  const Matrix x = random_matrix(50, 6, 4);
  const CalibrationBatch calib{x, linear_forward(l, x)};
  const Matrix xe = random_matrix(10, 6, 5);
  const CalibrationBatch eval{xe, linear_forward(l, xe)};
  const auto grid = log_grid(1e-6, 1e3, 10);
  const SweepResult s = lambda_sweep(l, calib, eval, grid, {3, true, PerTensor{}});
  ASSERT_EQ(s.points.size(), 10u);
  EXPECT_LT(s.points.front().heldout_l2, 1e-5);
  EXPECT_LT(s.points.front().residual, 1e-5);
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    EXPECT_GE(s.points[i].heldout_l2, s.points[i - 1].heldout_l2);
    EXPECT_LE(s.points[i].frob_norm, s.points[i - 1].frob_norm);
    EXPECT_GE(s.points[i].residual, s.points[i - 1].residual);
  }
  EXPECT_EQ(heldout_argmin(s), 0u);
  EXPECT_NEAR(s.baseline_quant_mse, quantization_mse(l.w, minmax_observe(l.w, {3, true, PerTensor{}})), 0.0);
}

TEST(Sweep, IllConditionedIsUShapedWithCrossover) {
  const IllCondFixture f = make_illcond({}, 0);
  const auto grid = log_grid(1e-8, 1e3, 25);
  const SweepResult s = lambda_sweep(f.net.layers[0].linear, f.calib, f.eval, grid, {3, true, PerTensor{}});
  const std::size_t best = heldout_argmin(s);
  EXPECT_GT(best, 0u);
  EXPECT_LT(best, grid.size() - 1);
  EXPECT_LT(s.points[best].heldout_l2, s.points.front().heldout_l2);
  EXPECT_LT(s.points[best].heldout_l2, s.points.back().heldout_l2);
  const auto cross = quant_crossover_index(s);
  ASSERT_TRUE(cross.has_value());
  for (std::size_t i = *cross; i < s.points.size(); ++i)
    EXPECT_LT(s.points[i].quant_mse, s.baseline_quant_mse);
}

TEST(Sweep, RejectsBadGrids) {
  const IllCondFixture f = make_illcond({}, 1);
  const auto& l = f.net.layers[0].linear;
  const QuantSpec spec{3, true, PerTensor{}};
  EXPECT_THROW(lambda_sweep(l, f.calib, f.eval, std::vector<double>{}, spec), std::invalid_argument);
  EXPECT_THROW(lambda_sweep(l, f.calib, f.eval, std::vector<double>{1.0, 0.5}, spec), std::invalid_argument);
  EXPECT_THROW(lambda_sweep(l, f.calib, f.eval, std::vector<double>{-1.0}, spec), std::invalid_argument);
}

TEST(Crossover, NoneWhenLastPointIsAboveBaseline) {
  SweepResult s;
  s.baseline_quant_mse = 1.0;
  s.points = {{.quant_mse = 0.5}, {.quant_mse = 2.0}};
  EXPECT_FALSE(quant_crossover_index(s).has_value());
  s.points.push_back({.quant_mse = 0.9});
  EXPECT_EQ(quant_crossover_index(s), std::optional<std::size_t>{2});
}
