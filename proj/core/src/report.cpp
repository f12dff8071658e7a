#include "qcal/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qcal/linalg.hpp"
#include "qcal/synth.hpp"

namespace qcal {
namespace {

DistributionSummary summarize(const Matrix& m, double lo, double hi) {
  DistributionSummary s;
  const auto v = m.values();
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(v.size()));
  s.histogram.assign(kHistogramBins, 0);
  const double width = hi - lo;
  for (double x : v) {
    std::size_t bin = 0;
    if (width > 0.0) {
      const double t = (x - lo) / width * static_cast<double>(kHistogramBins);
      bin = std::min(static_cast<std::size_t>(std::max(t, 0.0)), kHistogramBins - 1);
    }
    ++s.histogram[bin];
  }
  return s;
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (count == 0 || !(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi) || (count > 1 && hi == lo)) {
    throw std::invalid_argument("log_grid needs 0 < lo < hi and count >= 1");
  }
  std::vector<double> g = log_spaced_descending(hi, lo, count);
  std::reverse(g.begin(), g.end());
  g.front() = lo;
  g.back() = hi;
  return g;
}

SweepResult lambda_sweep(const LayerSnapshot& layer, const CalibrationBatch& calib,
                         const CalibrationBatch& eval, std::span<const double> grid,
                         const QuantSpec& spec) {
  layer.validate();
  spec.validate();
  if (grid.empty()) throw std::invalid_argument("lambda_sweep: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument("lambda_sweep: grid must be finite, >= 0 and strictly increasing");
    }
  }
  if (calib.x.cols() != layer.d_in() || eval.x.cols() != layer.d_in() ||
      calib.y.cols() != layer.d_out() || calib.x.rows() != calib.y.rows() || calib.x.rows() == 0 ||
      eval.x.rows() == 0) {
    throw std::invalid_argument("lambda_sweep: batches inconsistent with layer '" + layer.name + "'");
  }

  SweepResult out;
  out.layer = layer.name;
  out.spec = spec;
  out.baseline_quant_mse = quantization_mse(layer.w, minmax_observe(layer.w, spec));

  const SvdResult f = svd(calib.x);
  Matrix target = calib.y;
  for (std::size_t r = 0; r < target.rows(); ++r) {
    auto row = target.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= layer.bias[c];
  }
  const Matrix reference = matmul_nt(eval.x, layer.w);

  for (double lambda : grid) {
    SweepPoint p;
    p.lambda = lambda;
    const Matrix w_hat = ridge_solve(f, target, lambda);
    const Matrix diff = matmul_nt(eval.x, w_hat) - reference;
    p.heldout_l2 = frobenius_norm(diff);
    double per_row = 0.0;
    for (std::size_t r = 0; r < diff.rows(); ++r) {
      double acc = 0.0;
      for (double v : diff.row(r)) acc += v * v;
      per_row += std::sqrt(acc);
    }
    p.heldout_l2_per_sample = per_row / static_cast<double>(diff.rows());
    p.quant_mse = quantization_mse(w_hat, minmax_observe(w_hat, spec));
    p.frob_norm = frobenius_norm(w_hat);
    p.residual = frobenius_distance(matmul_nt(calib.x, w_hat), target);
    out.points.push_back(p);
  }
  return out;
}

std::optional<std::size_t> quant_crossover_index(const SweepResult& sweep) {
  std::optional<std::size_t> idx;
  for (std::size_t i = sweep.points.size(); i-- > 0;) {
    if (!(sweep.points[i].quant_mse < sweep.baseline_quant_mse)) break;
    idx = i;
  }
  return idx;
}

std::size_t heldout_argmin(const SweepResult& sweep) {
  if (sweep.points.empty()) throw std::invalid_argument("heldout_argmin: empty sweep");
  std::size_t best = 0;
  for (std::size_t i = 1; i < sweep.points.size(); ++i)
    if (sweep.points[i].heldout_l2 < sweep.points[best].heldout_l2) best = i;
  return best;
}

DistributionComparison distribution_summary(const Matrix& before, const Matrix& after) {
  if (before.empty() || after.empty()) {
    throw std::invalid_argument("distribution_summary: tensors must be non-empty");
  }
  DistributionComparison c;
  const auto [b_lo, b_hi] = std::minmax_element(before.values().begin(), before.values().end());
  const auto [a_lo, a_hi] = std::minmax_element(after.values().begin(), after.values().end());
  c.range_lo = std::min(*b_lo, *a_lo);
  c.range_hi = std::max(*b_hi, *a_hi);
  c.before = summarize(before, c.range_lo, c.range_hi);
  c.after = summarize(after, c.range_lo, c.range_hi);
  return c;
}

OccupancyComparison occupancy_compare(const Matrix& w, int bits, double alpha) {
  const QuantSpec spec{bits, true, PerTensor{}};
  spec.validate();
  OccupancyComparison c;
  c.bits = bits;
  c.alpha = alpha;
  c.minmax_params = minmax_observe(w, spec);
  SigmaObservation s = sigma_observe(w, spec, alpha);
  c.clipped_params = std::move(s.params);
  c.clip = std::move(s.clip);
  c.minmax_occupancy = bin_occupancy(quantize(w, c.minmax_params), spec);
  // Codes of the clipped path come from the pre-clipped values.
  const Matrix clipped_fq = fake_quantize(w, c.clipped_params, &c.clip);
  c.clipped_occupancy = bin_occupancy(quantize(clipped_fq, c.clipped_params), spec);
  c.minmax_mse = quantization_mse(w, c.minmax_params);
  c.clipped_mse = quantization_mse(w, c.clipped_params, &c.clip);
  return c;
}

std::size_t sparse_levels(std::span<const std::size_t> occupancy, double fraction) {
  const double total = static_cast<double>(std::accumulate(occupancy.begin(), occupancy.end(), std::size_t{0}));
  return static_cast<std::size_t>(std::count_if(occupancy.begin(), occupancy.end(), [&](std::size_t n) {
    return static_cast<double>(n) < fraction * total;
  }));
}

}  // namespace qcal
