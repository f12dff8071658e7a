#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qcal/linalg.hpp"
#include "qcal/matrix.hpp"
#include "qcal/network.hpp"

namespace qcal {

// Stacked inputs a layer saw (n x d_in) and the outputs it produced (n x d_out).
// Token/spatial positions are flattened into rows.
struct CalibrationBatch {
  Matrix x;
  Matrix y;
};

struct CapturedLayer {
  std::string name;
  CalibrationBatch batch;
};

using Captures = std::vector<CapturedLayer>;

// One full-precision forward pass recording every linear layer's exact input
// and output.
Captures capture(const Network& net, const Matrix& inputs);

const CalibrationBatch& find_batch(const Captures& captures, std::string_view layer);

// ||x w^T + b - y||_F <= rel_tol * max(1, ||y||_F)
bool batch_consistent(const LayerSnapshot& layer, const CalibrationBatch& batch,
                      double rel_tol = 1e-5);

enum class LambdaRationale { WellConditioned, IllConditioned, RankDeficient };

std::string_view rationale_name(LambdaRationale r);

struct LambdaPolicy {
  enum class Mode { Auto, Fixed };

  Mode mode = Mode::Auto;
  double fixed_lambda = 0.0;
  // Multiple of the selected singular value; between two and five.
  double factor = 5.0;
  // cond above this is ill-conditioned.
  double cond_ill = 1e2;
  // sigma_* is the smallest singular value with sigma_max / sigma_* <= cond_rankdef.
  double cond_rankdef = 1e3;
  // Singular values below this fraction of sigma_max count as zero.
  double rank_tolerance = kDefaultRankTolerance;

  static LambdaPolicy fixed(double lambda);
  void validate() const;
};

struct LambdaSelection {
  double lambda;
  LambdaRationale rationale;
  // sigma_max / smallest non-zero singular value.
  double condition_number;
  // The singular value lambda was derived from.
  double reference_sigma;
};

// Rule on the descending spectrum:
//   cond <= cond_ill                      -> WellConditioned, factor * sigma_min
//   cond <= 10 * cond_rankdef             -> IllConditioned,  factor * sigma_min
//   otherwise                             -> RankDeficient,   factor * sigma_*
// where sigma_min is the smallest non-zero singular value. The mode field of
// the policy is ignored here; calibrate_layer applies Fixed overrides.
LambdaSelection select_lambda(std::span<const double> singular_values, const LambdaPolicy& policy);

struct CalibrationReport {
  std::string layer;
  std::string lambda_mode;
  double lambda = 0.0;
  LambdaRationale rationale = LambdaRationale::WellConditioned;
  double condition_number = 0.0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double reference_sigma = 0.0;
  std::size_t effective_rank = 0;
  std::size_t rows = 0;
  double weight_norm_before = 0.0;
  double weight_norm_after = 0.0;
  double weight_std_before = 0.0;
  double weight_std_after = 0.0;
  // ||x W_hat^T + b - y||_F on the calibration batch.
  double calibration_residual = 0.0;
  std::optional<double> heldout_residual;
};

struct CalibratedLayer {
  LayerSnapshot layer;
  CalibrationReport report;
};

// Replaces w by ridge_solve(x, y - bias, lambda); bias is kept. With a Fixed
// policy of lambda = 0 on a RankDeficient spectrum this throws NumericalError.
CalibratedLayer calibrate_layer(const LayerSnapshot& layer, const CalibrationBatch& batch,
                                const LambdaPolicy& policy,
                                const CalibrationBatch* eval = nullptr);

struct CalibratedNetwork {
  Network net;
  std::vector<CalibrationReport> reports;
};

// Every layer is fitted against activations of the original network, captured
// in a single pass; calibrated layers never feed later ones.
CalibratedNetwork calibrate_model(const Network& net, const Matrix& inputs,
                                  const LambdaPolicy& policy,
                                  const Matrix* eval_inputs = nullptr);
CalibratedNetwork calibrate_model(const Network& net, const Captures& captures,
                                  const LambdaPolicy& policy,
                                  const Captures* eval_captures = nullptr);

// Population standard deviation over all entries.
double weight_std(const Matrix& w);

}  // namespace qcal
