#pragma once

#include "depthprop/config.hpp"
#include "depthprop/metrics.hpp"
#include "depthprop/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace depthprop {

/// Report documents carry {"schema": name, "version": "major.minor"}. Readers accept any minor
/// of the major they were written for.
inline constexpr int kReportMajorVersion = 1;
inline constexpr int kReportMinorVersion = 0;

inline constexpr std::string_view kTraceSchema = "depthprop.trace";
inline constexpr std::string_view kMetricsSchema = "depthprop.metrics";
inline constexpr std::string_view kAblationSchema = "depthprop.ablation";

class ReportError : public InvalidInput {
  public:
    using InvalidInput::InvalidInput;
};

nlohmann::json trace_to_json(const SolveTrace& trace, const RunConfig& cfg);
nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& doc);
SolveTrace trace_from_json(const nlohmann::json& doc);

/// Adds the schema and version fields to `body`.
nlohmann::json make_document(std::string_view schema, nlohmann::json body);

/// Parses a document and checks its schema name and major version.
nlohmann::json parse_document(std::string_view text, std::string_view expectedSchema);

void write_document(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_document(const std::filesystem::path& path, std::string_view expectedSchema);

}  // namespace depthprop
