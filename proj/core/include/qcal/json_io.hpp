#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "qcal/calib.hpp"
#include "qcal/quant.hpp"
#include "qcal/report.hpp"

namespace qcal {

inline constexpr const char* kToolVersion = "qcal 0.1.0";

nlohmann::json to_json(const QuantSpec& spec);
nlohmann::json to_json(const QuantParams& params);
nlohmann::json to_json(const ClipStats& clip);
nlohmann::json to_json(const LambdaSelection& sel);
nlohmann::json to_json(const CalibrationReport& report);
nlohmann::json to_json(const SweepResult& sweep);
nlohmann::json to_json(const DistributionSummary& summary);
nlohmann::json to_json(const DistributionComparison& cmp);
nlohmann::json to_json(const OccupancyComparison& cmp);

// {tool_version, input_digests, results}
nlohmann::json make_report(const std::map<std::string, std::string>& input_digests,
                           nlohmann::json results);

// Stable text form: two-space indent plus trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace qcal
