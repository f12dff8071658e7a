#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcal/calib.hpp"
#include "qcal/quant.hpp"

namespace qcal {

// count log-spaced values from lo to hi inclusive, strictly increasing.
std::vector<double> log_grid(double lo, double hi, std::size_t count);

struct SweepPoint {
  double lambda = 0.0;
  // ||x_eval W_hat^T - x_eval W^T||_F
  double heldout_l2 = 0.0;
  // Mean over held-out rows of the per-row L2 distance.
  double heldout_l2_per_sample = 0.0;
  // MSE between W_hat and its MinMax fake-quantized copy.
  double quant_mse = 0.0;
  double frob_norm = 0.0;
  // ||x W_hat^T + b - y||_F on the calibration batch.
  double residual = 0.0;
};

struct SweepResult {
  std::string layer;
  QuantSpec spec;
  std::vector<SweepPoint> points;
  // Quantization MSE of the original weight under the same spec.
  double baseline_quant_mse = 0.0;
};

SweepResult lambda_sweep(const LayerSnapshot& layer, const CalibrationBatch& calib,
                         const CalibrationBatch& eval, std::span<const double> grid,
                         const QuantSpec& spec);

// First grid index from which every quant_mse is below the baseline.
std::optional<std::size_t> quant_crossover_index(const SweepResult& sweep);
std::size_t heldout_argmin(const SweepResult& sweep);

inline constexpr std::size_t kHistogramBins = 101;

struct DistributionSummary {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<std::size_t> histogram;
};

struct DistributionComparison {
  DistributionSummary before;
  DistributionSummary after;
  // Shared bin range: pooled min/max of both tensors.
  double range_lo = 0.0;
  double range_hi = 0.0;
};

DistributionComparison distribution_summary(const Matrix& before, const Matrix& after);

struct OccupancyComparison {
  int bits = 0;
  double alpha = 0.0;
  QuantParams minmax_params;
  QuantParams clipped_params;
  ClipStats clip;
  std::vector<std::size_t> minmax_occupancy;
  std::vector<std::size_t> clipped_occupancy;
  double minmax_mse = 0.0;
  double clipped_mse = 0.0;
};

// Per-tensor signed quantization of w through the MinMax and the
// sigma-clipped observers.
OccupancyComparison occupancy_compare(const Matrix& w, int bits, double alpha);

// Levels holding strictly fewer than fraction * total elements.
std::size_t sparse_levels(std::span<const std::size_t> occupancy, double fraction);

}  // namespace qcal
