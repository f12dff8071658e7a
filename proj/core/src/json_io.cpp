#include "qcal/json_io.hpp"

#include <variant>

namespace qcal {

using nlohmann::json;

json to_json(const QuantSpec& spec) {
  json j{{"bits", spec.bits}, {"signed", spec.is_signed}};
  if (const auto* a = std::get_if<PerAxis>(&spec.granularity)) {
    j["granularity"] = "per_axis";
    j["axis"] = a->axis;
  } else {
    j["granularity"] = "per_tensor";
  }
  return j;
}

json to_json(const QuantParams& params) {
  const QuantRange r = qrange(params.spec);
  return json{{"spec", to_json(params.spec)},
              {"qmin", r.qmin},
              {"qmax", r.qmax},
              {"scale", params.scale},
              {"zero_point", params.zero_point}};
}

json to_json(const ClipStats& clip) {
  return json{{"alpha", clip.alpha}, {"mu", clip.mu}, {"sigma", clip.sigma}};
}

json to_json(const LambdaSelection& sel) {
  return json{{"lambda", sel.lambda},
              {"rationale", rationale_name(sel.rationale)},
              {"condition_number", sel.condition_number},
              {"reference_sigma", sel.reference_sigma}};
}

json to_json(const CalibrationReport& r) {
  json j{{"layer", r.layer},
         {"lambda_mode", r.lambda_mode},
         {"lambda", r.lambda},
         {"rationale", rationale_name(r.rationale)},
         {"condition_number", r.condition_number},
         {"sigma_max", r.sigma_max},
         {"sigma_min", r.sigma_min},
         {"reference_sigma", r.reference_sigma},
         {"effective_rank", r.effective_rank},
         {"rows", r.rows},
         {"weight_norm_before", r.weight_norm_before},
         {"weight_norm_after", r.weight_norm_after},
         {"weight_std_before", r.weight_std_before},
         {"weight_std_after", r.weight_std_after},
         {"calibration_residual", r.calibration_residual}};
  j["heldout_residual"] = r.heldout_residual ? json(*r.heldout_residual) : json(nullptr);
  return j;
}

json to_json(const SweepResult& sweep) {
  json points = json::array();
  for (const SweepPoint& p : sweep.points) {
    points.push_back({{"lambda", p.lambda},
                      {"heldout_l2", p.heldout_l2},
                      {"heldout_l2_per_sample", p.heldout_l2_per_sample},
                      {"quant_mse", p.quant_mse},
                      {"frob_norm", p.frob_norm},
                      {"residual", p.residual}});
  }
  json j{{"layer", sweep.layer},
         {"spec", to_json(sweep.spec)},
         {"baseline_quant_mse", sweep.baseline_quant_mse},
         {"points", std::move(points)}};
  const auto cross = quant_crossover_index(sweep);
  j["quant_crossover_lambda"] = cross ? json(sweep.points[*cross].lambda) : json(nullptr);
  if (!sweep.points.empty()) j["heldout_argmin_lambda"] = sweep.points[heldout_argmin(sweep)].lambda;
  return j;
}

json to_json(const DistributionSummary& s) {
  return json{{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}, {"histogram", s.histogram}};
}

json to_json(const DistributionComparison& c) {
  return json{{"range", {c.range_lo, c.range_hi}},
              {"bins", kHistogramBins},
              {"before", to_json(c.before)},
              {"after", to_json(c.after)}};
}

json to_json(const OccupancyComparison& c) {
  return json{{"bits", c.bits},
              {"alpha", c.alpha},
              {"minmax", {{"params", to_json(c.minmax_params)},
                          {"occupancy", c.minmax_occupancy},
                          {"mse", c.minmax_mse}}},
              {"sigma", {{"params", to_json(c.clipped_params)},
                         {"clip", to_json(c.clip)},
                         {"occupancy", c.clipped_occupancy},
                         {"mse", c.clipped_mse}}}};
}

json make_report(const std::map<std::string, std::string>& input_digests, json results) {
  return json{{"tool_version", kToolVersion},
              {"input_digests", input_digests},
              {"results", std::move(results)}};
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace qcal
