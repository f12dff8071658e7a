#include "qcal/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qcal {
namespace {

// Group index of element (r, c).
struct Grouping {
  std::size_t count;
  bool by_row;
  bool by_col;

  std::size_t operator()(std::size_t r, std::size_t c) const {
    return by_row ? r : (by_col ? c : 0);
  }
};

Grouping make_grouping(const Matrix& x, const Granularity& g) {
  if (const auto* axis = std::get_if<PerAxis>(&g)) {
    if (axis->axis == 0) return {x.rows(), true, false};
    if (axis->axis == 1) return {x.cols(), false, true};
    throw std::invalid_argument("per-axis quantization axis " + std::to_string(axis->axis) +
                                " is invalid for a 2-D tensor");
  }
  return {1, false, false};
}

void check_params_for(const Matrix& x, const QuantParams& p) {
  p.validate();
  const Grouping g = make_grouping(x, p.spec.granularity);
  if (g.count != p.groups()) {
    throw std::invalid_argument("quant params carry " + std::to_string(p.groups()) +
                                " groups but the tensor has " + std::to_string(g.count));
  }
}

void check_clip(const ClipStats* clip, std::size_t groups) {
  if (!clip) return;
  if (clip->mu.size() != clip->sigma.size()) {
    throw std::invalid_argument("clip stats: mu and sigma lengths differ");
  }
  if (clip->mu.size() != groups) {
    throw std::invalid_argument("clip stats carry " + std::to_string(clip->mu.size()) +
                                " groups, expected " + std::to_string(groups));
  }
  if (!(clip->alpha > 0.0)) throw std::invalid_argument("clip alpha must be positive");
}

void require_nonempty(const Matrix& x) {
  if (x.empty()) throw std::invalid_argument("cannot observe an empty tensor");
}

// MinMax rule over per-group ranges [lo, hi].
QuantParams params_from_ranges(const QuantSpec& spec, const std::vector<double>& lo,
                               const std::vector<double>& hi) {
  const QuantRange r = qrange(spec);
  QuantParams p{spec, std::vector<double>(lo.size()), std::vector<std::int32_t>(lo.size())};
  for (std::size_t g = 0; g < lo.size(); ++g) {
    double scale = (hi[g] - lo[g]) / static_cast<double>(r.qmax - r.qmin);
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
    const double z = round_half_even(static_cast<double>(r.qmin) - lo[g] / scale);
    p.scale[g] = scale;
    p.zero_point[g] = static_cast<std::int32_t>(
        std::clamp(z, static_cast<double>(r.qmin), static_cast<double>(r.qmax)));
  }
  return p;
}

void group_minmax(const Matrix& x, const Grouping& grouping, std::vector<double>& lo,
                  std::vector<double>& hi) {
  lo.assign(grouping.count, std::numeric_limits<double>::infinity());
  hi.assign(grouping.count, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const std::size_t g = grouping(r, c);
      lo[g] = std::min(lo[g], x(r, c));
      hi[g] = std::max(hi[g], x(r, c));
    }
  }
}

double clip_value(double v, const ClipStats* clip, std::size_t g) {
  if (!clip || !(clip->sigma[g] > 0.0)) return v;
  const double half = clip->alpha * clip->sigma[g];
  return std::clamp(v, clip->mu[g] - half, clip->mu[g] + half);
}

}  // namespace

void QuantSpec::validate() const {
  if (bits < 2 || bits > 8) {
    throw std::invalid_argument("quantization bits must be in [2, 8], got " + std::to_string(bits));
  }
}

QuantRange qrange(const QuantSpec& spec) {
  spec.validate();
  if (spec.is_signed) {
    const std::int32_t half = std::int32_t{1} << (spec.bits - 1);
    return {-half, half - 1};
  }
  return {0, (std::int32_t{1} << spec.bits) - 1};
}

void QuantParams::validate() const {
  const QuantRange r = qrange(spec);
  if (scale.empty() || scale.size() != zero_point.size()) {
    throw std::invalid_argument("quant params: scale and zero_point must be non-empty and equal length");
  }
  if (std::holds_alternative<PerTensor>(spec.granularity) && scale.size() != 1) {
    throw std::invalid_argument("per-tensor quant params must have exactly one group");
  }
  for (std::size_t g = 0; g < scale.size(); ++g) {
    if (!(scale[g] > 0.0) || !std::isfinite(scale[g])) {
      throw std::invalid_argument("quant params: scale must be positive and finite");
    }
    if (zero_point[g] < r.qmin || zero_point[g] > r.qmax) {
      throw std::invalid_argument("quant params: zero point outside [qmin, qmax]");
    }
  }
}

std::size_t group_count(const Matrix& x, const Granularity& g) { return make_grouping(x, g).count; }

double round_half_even(double v) {
  const double r = std::round(v);  // ties away from zero
  if (std::abs(v - std::trunc(v)) == 0.5) return 2.0 * std::round(v / 2.0);
  return r;
}

QuantParams minmax_observe(const Matrix& x, const QuantSpec& spec) {
  spec.validate();
  require_nonempty(x);
  const Grouping grouping = make_grouping(x, spec.granularity);
  std::vector<double> lo, hi;
  group_minmax(x, grouping, lo, hi);
  return params_from_ranges(spec, lo, hi);
}

SigmaObservation sigma_observe(const Matrix& x, const QuantSpec& spec, double alpha) {
  spec.validate();
  require_nonempty(x);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("sigma_observe: alpha must be positive and finite");
  }
  const Grouping grouping = make_grouping(x, spec.granularity);
  const std::size_t n = grouping.count;
  std::vector<double> sum(n, 0.0), count(n, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const std::size_t g = grouping(r, c);
      sum[g] += x(r, c);
      count[g] += 1.0;
    }
  ClipStats clip{std::vector<double>(n), std::vector<double>(n, 0.0), alpha};
  for (std::size_t g = 0; g < n; ++g) clip.mu[g] = sum[g] / count[g];
  std::vector<double> sq(n, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const std::size_t g = grouping(r, c);
      const double d = x(r, c) - clip.mu[g];
      sq[g] += d * d;
    }
  for (std::size_t g = 0; g < n; ++g) clip.sigma[g] = std::sqrt(sq[g] / count[g]);

  std::vector<double> lo, hi;
  group_minmax(x, grouping, lo, hi);
  for (std::size_t g = 0; g < n; ++g) {
    if (!(clip.sigma[g] > 0.0)) continue;
    const double half = alpha * clip.sigma[g];
    lo[g] = std::max(lo[g], clip.mu[g] - half);
    hi[g] = std::min(hi[g], clip.mu[g] + half);
  }
  QuantParams params = params_from_ranges(spec, lo, hi);
  return {std::move(clip), std::move(params)};
}

Tensor quantize(const Matrix& x, const QuantParams& p) {
  check_params_for(x, p);
  const QuantRange r = qrange(p.spec);
  const Grouping grouping = make_grouping(x, p.spec.granularity);
  std::vector<std::int32_t> codes(x.size());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const std::size_t g = grouping(i, j);
      const double q = round_half_even(x(i, j) / p.scale[g]) + p.zero_point[g];
      codes[i * x.cols() + j] = static_cast<std::int32_t>(
          std::clamp(q, static_cast<double>(r.qmin), static_cast<double>(r.qmax)));
    }
  return Tensor::i32({x.rows(), x.cols()}, std::move(codes));
}

Matrix dequantize(const Tensor& codes, const QuantParams& p) {
  if (codes.dtype() != DType::I32) throw std::invalid_argument("dequantize expects i32 codes");
  if (codes.rank() > 2) throw std::invalid_argument("dequantize expects a rank-1 or rank-2 tensor");
  const std::size_t rows = codes.rank() == 2 ? codes.dims()[0] : 1;
  const std::size_t cols = codes.dims().back();
  Matrix out(rows, cols);
  check_params_for(out, p);
  const QuantRange r = qrange(p.spec);
  const Grouping grouping = make_grouping(out, p.spec.granularity);
  const auto q = codes.i32_data();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const std::int32_t code = q[i * cols + j];
      if (code < r.qmin || code > r.qmax) {
        throw std::invalid_argument("dequantize: code " + std::to_string(code) + " outside [" +
                                    std::to_string(r.qmin) + ", " + std::to_string(r.qmax) + "]");
      }
      const std::size_t g = grouping(i, j);
      out(i, j) = static_cast<double>(code - p.zero_point[g]) * p.scale[g];
    }
  return out;
}

Matrix fake_quantize(const Matrix& x, const QuantParams& p, const ClipStats* clip,
                     Rounding rounding) {
  check_params_for(x, p);
  check_clip(clip, p.groups());
  const QuantRange r = qrange(p.spec);
  const Grouping grouping = make_grouping(x, p.spec.granularity);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const std::size_t g = grouping(i, j);
      const double v = clip_value(x(i, j), clip, g) / p.scale[g];
      const double level = (rounding == Rounding::HalfEven ? round_half_even(v) : v) +
                           static_cast<double>(p.zero_point[g]);
      const double q = std::clamp(level, static_cast<double>(r.qmin), static_cast<double>(r.qmax));
      out(i, j) = (q - p.zero_point[g]) * p.scale[g];
    }
  return out;
}

Window effective_window(const QuantParams& p, const ClipStats* clip, std::size_t group) {
  const QuantRange r = qrange(p.spec);
  Window w{static_cast<double>(r.qmin - p.zero_point.at(group)) * p.scale[group],
           static_cast<double>(r.qmax - p.zero_point[group]) * p.scale[group]};
  if (clip && clip->sigma.at(group) > 0.0) {
    const double half = clip->alpha * clip->sigma[group];
    w.lo = std::max(w.lo, clip->mu[group] - half);
    w.hi = std::min(w.hi, clip->mu[group] + half);
  }
  return w;
}

Matrix ste_backward(const Matrix& upstream, const Matrix& x, const QuantParams& p,
                    const ClipStats* clip) {
  if (upstream.rows() != x.rows() || upstream.cols() != x.cols()) {
    throw std::invalid_argument("ste_backward: upstream and x shapes differ");
  }
  check_params_for(x, p);
  check_clip(clip, p.groups());
  const Grouping grouping = make_grouping(x, p.spec.granularity);
  std::vector<Window> windows(p.groups());
  for (std::size_t g = 0; g < windows.size(); ++g) windows[g] = effective_window(p, clip, g);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const Window& w = windows[grouping(i, j)];
      const double v = x(i, j);
      out(i, j) = (v >= w.lo && v <= w.hi) ? upstream(i, j) : 0.0;
    }
  return out;
}

std::vector<std::size_t> bin_occupancy(const Tensor& codes, const QuantSpec& spec) {
  if (codes.dtype() != DType::I32) throw std::invalid_argument("bin_occupancy expects i32 codes");
  const QuantRange r = qrange(spec);
  std::vector<std::size_t> counts(static_cast<std::size_t>(r.qmax - r.qmin + 1), 0);
  for (std::int32_t q : codes.i32_data()) {
    if (q < r.qmin || q > r.qmax) {
      throw std::invalid_argument("bin_occupancy: code " + std::to_string(q) + " out of range");
    }
    ++counts[static_cast<std::size_t>(q - r.qmin)];
  }
  return counts;
}

double quantization_mse(const Matrix& x, const QuantParams& p, const ClipStats* clip) {
  const Matrix fq = fake_quantize(x, p, clip);
  const double d = frobenius_distance(x, fq);
  return d * d / static_cast<double>(x.size());
}

}  // namespace qcal
