#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "qcal/matrix.hpp"
#include "qcal/tensor.hpp"

namespace qcal {

struct PerTensor {
  friend bool operator==(const PerTensor&, const PerTensor&) = default;
};

// One (scale, zero_point) pair per index along `axis`: axis 0 groups rows,
// axis 1 groups columns.
struct PerAxis {
  std::size_t axis = 0;
  friend bool operator==(const PerAxis&, const PerAxis&) = default;
};

using Granularity = std::variant<PerTensor, PerAxis>;

struct QuantSpec {
  int bits = 8;
  bool is_signed = true;
  Granularity granularity = PerTensor{};

  // Throws std::invalid_argument unless bits is in [2, 8].
  void validate() const;
  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

struct QuantRange {
  std::int32_t qmin;
  std::int32_t qmax;
  friend bool operator==(const QuantRange&, const QuantRange&) = default;
};

// signed: [-2^(b-1), 2^(b-1) - 1], unsigned: [0, 2^b - 1]
QuantRange qrange(const QuantSpec& spec);

struct QuantParams {
  QuantSpec spec;
  std::vector<double> scale;
  std::vector<std::int32_t> zero_point;

  std::size_t groups() const noexcept { return scale.size(); }
  // Scales positive and finite, zero points inside [qmin, qmax], equal lengths.
  void validate() const;
  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

// Mean / population std per group and the cut-off multiplier alpha; the clip
// window of group g is [mu[g] - alpha*sigma[g], mu[g] + alpha*sigma[g]].
// A group with sigma == 0 is not clipped.
struct ClipStats {
  std::vector<double> mu;
  std::vector<double> sigma;
  double alpha = 3.0;

  friend bool operator==(const ClipStats&, const ClipStats&) = default;
};

struct Window {
  double lo;
  double hi;
};

std::size_t group_count(const Matrix& x, const Granularity& g);

QuantParams minmax_observe(const Matrix& x, const QuantSpec& spec);

struct SigmaObservation {
  ClipStats clip;
  QuantParams params;
};

// Statistics per tensor, or per slice along the PerAxis axis (axis 1 for an
// n x d_in activation batch gives per-input-channel stats). Params follow the
// MinMax rule over the clipped values, i.e. over
// [max(min, mu - alpha*sigma), min(max, mu + alpha*sigma)].
SigmaObservation sigma_observe(const Matrix& x, const QuantSpec& spec, double alpha);

double round_half_even(double v);

// clip(round(x / s) + z, qmin, qmax) as I32 codes with dims {rows, cols}.
Tensor quantize(const Matrix& x, const QuantParams& p);

// (q - z) * s. Codes outside [qmin, qmax] are rejected.
Matrix dequantize(const Tensor& codes, const QuantParams& p);

// HalfEven is the production path; None skips rounding so tests can compare
// the STE mask against the derivative of the clip envelope.
enum class Rounding { HalfEven, None };

// dequantize(quantize(clip(x))) with the optional mu +- alpha*sigma pre-clip.
Matrix fake_quantize(const Matrix& x, const QuantParams& p, const ClipStats* clip = nullptr,
                     Rounding rounding = Rounding::HalfEven);

// Interval a value can be reproduced in for group g: the representable span
// [(qmin - z) s, (qmax - z) s] intersected with the clip window.
Window effective_window(const QuantParams& p, const ClipStats* clip, std::size_t group);

// Straight-through estimator: upstream where x lies inside the (closed)
// effective window, zero where it was clipped or saturated.
Matrix ste_backward(const Matrix& upstream, const Matrix& x, const QuantParams& p,
                    const ClipStats* clip = nullptr);

// Count per integer level; index 0 is qmin.
std::vector<std::size_t> bin_occupancy(const Tensor& codes, const QuantSpec& spec);

// Mean squared difference between x and fake_quantize(x).
double quantization_mse(const Matrix& x, const QuantParams& p, const ClipStats* clip = nullptr);

}  // namespace qcal
