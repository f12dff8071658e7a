#include "qcal/calib.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qcal/errors.hpp"

namespace qcal {
namespace {

Matrix subtract_bias(const Matrix& y, const std::vector<double>& bias) {
  Matrix out = y;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= bias[c];
  }
  return out;
}

void check_batch(const LayerSnapshot& layer, const CalibrationBatch& b, const char* what) {
  if (b.x.rows() == 0) throw std::invalid_argument(std::string(what) + " batch is empty");
  if (b.x.rows() != b.y.rows()) {
    throw std::invalid_argument(std::string(what) + " batch for '" + layer.name +
                                "': x and y row counts differ");
  }
  if (b.x.cols() != layer.d_in() || b.y.cols() != layer.d_out()) {
    throw std::invalid_argument(std::string(what) + " batch for '" + layer.name + "' is " +
                                std::to_string(b.x.cols()) + " -> " + std::to_string(b.y.cols()) +
                                " but the layer is " + std::to_string(layer.d_in()) + " -> " +
                                std::to_string(layer.d_out()));
  }
}

}  // namespace

std::string_view rationale_name(LambdaRationale r) {
  switch (r) {
    case LambdaRationale::WellConditioned:
      return "well_conditioned";
    case LambdaRationale::IllConditioned:
      return "ill_conditioned";
    case LambdaRationale::RankDeficient:
      return "rank_deficient";
  }
  return "unknown";
}

Captures capture(const Network& net, const Matrix& inputs) {
  net.validate();
  if (inputs.rows() == 0) throw std::invalid_argument("capture: empty input batch");
  for (double v : inputs.values())
    if (!std::isfinite(v)) throw std::invalid_argument("capture: non-finite input");
  Captures out;
  out.reserve(net.layers.size());
  Matrix h = inputs;
  for (const auto& layer : net.layers) {
    Matrix y = linear_forward(layer.linear, h);
    Matrix next = apply_activation(layer.activation, y);
    out.push_back({layer.linear.name, {std::move(h), std::move(y)}});
    h = std::move(next);
  }
  return out;
}

const CalibrationBatch& find_batch(const Captures& captures, std::string_view layer) {
  for (const auto& c : captures)
    if (c.name == layer) return c.batch;
  throw FormatError("no captured activations for layer '" + std::string(layer) + "'");
}

bool batch_consistent(const LayerSnapshot& layer, const CalibrationBatch& batch, double rel_tol) {
  const Matrix pred = linear_forward(layer, batch.x);
  return frobenius_distance(pred, batch.y) <= rel_tol * std::max(1.0, frobenius_norm(batch.y));
}

LambdaPolicy LambdaPolicy::fixed(double lambda) {
  LambdaPolicy p;
  p.mode = Mode::Fixed;
  p.fixed_lambda = lambda;
  return p;
}

void LambdaPolicy::validate() const {
  if (!(factor >= 2.0 && factor <= 5.0)) {
    throw std::invalid_argument("lambda factor must be within [2, 5]");
  }
  if (!(cond_ill > 0.0) || !(cond_rankdef > 0.0) || cond_ill > cond_rankdef) {
    throw std::invalid_argument("condition thresholds must be positive with cond_ill <= cond_rankdef");
  }
  if (mode == Mode::Fixed && (!(fixed_lambda >= 0.0) || !std::isfinite(fixed_lambda))) {
    throw std::invalid_argument("fixed lambda must be finite and >= 0");
  }
  if (!(rank_tolerance > 0.0 && rank_tolerance < 1.0)) {
    throw std::invalid_argument("rank tolerance must be in (0, 1)");
  }
}

LambdaSelection select_lambda(std::span<const double> s, const LambdaPolicy& policy) {
  policy.validate();
  if (s.empty() || !(s.front() > 0.0)) {
    throw std::invalid_argument("select_lambda: all singular values are zero");
  }
  const double smax = s.front();
  const double cutoff = policy.rank_tolerance * smax;
  double smin = smax;
  for (double v : s)
    if (v >= cutoff) smin = std::min(smin, v);
  const double cond = smax / smin;

  if (cond <= policy.cond_ill) {
    return {policy.factor * smin, LambdaRationale::WellConditioned, cond, smin};
  }
  if (cond <= 10.0 * policy.cond_rankdef) {
    return {policy.factor * smin, LambdaRationale::IllConditioned, cond, smin};
  }
  double star = smax;
  for (double v : s)
    if (v >= cutoff && smax / v <= policy.cond_rankdef) star = std::min(star, v);
  return {policy.factor * star, LambdaRationale::RankDeficient, cond, star};
}

double weight_std(const Matrix& w) {
  if (w.empty()) return 0.0;
  double mean = 0.0;
  for (double v : w.values()) mean += v;
  mean /= static_cast<double>(w.size());
  double sq = 0.0;
  for (double v : w.values()) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(w.size()));
}

CalibratedLayer calibrate_layer(const LayerSnapshot& layer, const CalibrationBatch& batch,
                                const LambdaPolicy& policy, const CalibrationBatch* eval) {
  layer.validate();
  policy.validate();
  check_batch(layer, batch, "calibration");
  if (eval) check_batch(layer, *eval, "evaluation");

  const SvdResult f = svd(batch.x);
  const LambdaSelection sel = select_lambda(f.s, policy);
  const bool fixed = policy.mode == LambdaPolicy::Mode::Fixed;
  const double lambda = fixed ? policy.fixed_lambda : sel.lambda;
  if (fixed && lambda == 0.0 && sel.rationale == LambdaRationale::RankDeficient) {
    std::ostringstream msg;
    msg << "layer '" << layer.name << "': calibration inputs are effectively rank deficient (cond = "
        << sel.condition_number << " > " << 10.0 * policy.cond_rankdef
        << "); lambda = 0 is unstable, use automatic lambda selection";
    throw NumericalError(msg.str());
  }

  CalibratedLayer out;
  out.layer.name = layer.name;
  out.layer.bias = layer.bias;
  out.layer.w = ridge_solve(f, subtract_bias(batch.y, layer.bias), lambda, policy.rank_tolerance);

  CalibrationReport& r = out.report;
  r.layer = layer.name;
  r.lambda_mode = fixed ? "fixed" : "auto";
  r.lambda = lambda;
  r.rationale = sel.rationale;
  r.condition_number = sel.condition_number;
  r.sigma_max = f.s.front();
  r.sigma_min = f.s.back();
  r.reference_sigma = sel.reference_sigma;
  for (double v : f.s)
    if (v >= policy.rank_tolerance * f.s.front()) ++r.effective_rank;
  r.rows = batch.x.rows();
  r.weight_norm_before = frobenius_norm(layer.w);
  r.weight_norm_after = frobenius_norm(out.layer.w);
  r.weight_std_before = weight_std(layer.w);
  r.weight_std_after = weight_std(out.layer.w);
  r.calibration_residual = frobenius_distance(linear_forward(out.layer, batch.x), batch.y);
  if (eval) r.heldout_residual = frobenius_distance(linear_forward(out.layer, eval->x), eval->y);
  for (double v : {r.lambda, r.condition_number, r.calibration_residual, r.weight_norm_after}) {
    if (!std::isfinite(v)) {
      throw NumericalError("layer '" + layer.name + "': calibration produced non-finite values");
    }
  }
  return out;
}

CalibratedNetwork calibrate_model(const Network& net, const Captures& captures,
                                  const LambdaPolicy& policy, const Captures* eval_captures) {
  net.validate();
  CalibratedNetwork out;
  out.net = net;
  for (auto& layer : out.net.layers) {
    const CalibrationBatch& batch = find_batch(captures, layer.linear.name);
    const CalibrationBatch* eval =
        eval_captures ? &find_batch(*eval_captures, layer.linear.name) : nullptr;
    CalibratedLayer cl = calibrate_layer(layer.linear, batch, policy, eval);
    layer.linear = std::move(cl.layer);
    out.reports.push_back(std::move(cl.report));
  }
  return out;
}

CalibratedNetwork calibrate_model(const Network& net, const Matrix& inputs,
                                  const LambdaPolicy& policy, const Matrix* eval_inputs) {
  const Captures captures = capture(net, inputs);
  if (eval_inputs) {
    const Captures eval = capture(net, *eval_inputs);
    return calibrate_model(net, captures, policy, &eval);
  }
  return calibrate_model(net, captures, policy, nullptr);
}

}  // namespace qcal
