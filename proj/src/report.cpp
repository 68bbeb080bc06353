#include "depthprop/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace depthprop {

using nlohmann::json;

nlohmann::json make_document(std::string_view schema, json body)
{
    json doc = {{"schema", schema},
                {"version", std::to_string(kReportMajorVersion) + "." + std::to_string(kReportMinorVersion)}};
    doc.update(body);
    return doc;
}

nlohmann::json parse_document(std::string_view text, std::string_view expectedSchema)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ReportError(std::string("malformed report: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("schema") || !doc.contains("version"))
        throw ReportError("report lacks schema or version");
    if (doc["schema"] != expectedSchema)
        throw ReportError("expected a " + std::string(expectedSchema) + " report, got "
                          + doc["schema"].dump());
    const auto version = doc["version"].get<std::string>();
    int major = 0;
    const auto [ptr, ec] = std::from_chars(version.data(), version.data() + version.size(), major);
    if (ec != std::errc() || ptr == version.data() + version.size() || *ptr != '.')
        throw ReportError("malformed report version '" + version + "'");
    if (major != kReportMajorVersion)
        throw ReportError("unsupported report version " + version + "; this build reads "
                          + std::to_string(kReportMajorVersion) + ".x");
    return doc;
}

void write_document(const std::filesystem::path& path, const json& doc)
{
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(2) << '\n';
    if (!out)
        throw InvalidInput("cannot write report " + path.string());
}

nlohmann::json read_document(const std::filesystem::path& path, std::string_view expectedSchema)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInput("cannot open report " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_document(text.str(), expectedSchema);
}

nlohmann::json trace_to_json(const SolveTrace& trace, const RunConfig& cfg)
{
    // Column-wise per-iteration series keep large traces compact.
    json series = json::object();
    auto column = [&](const char* name, double IterationSummary::*field) {
        json values = json::array();
        for (const auto& it : trace.iterations)
            values.push_back(it.*field);
        series[name] = std::move(values);
    };
    column("dc", &IterationSummary::dc);
    column("gc", &IterationSummary::gc);
    column("sms", &IterationSummary::sms);
    column("smooth", &IterationSummary::smooth);
    column("seg", &IterationSummary::seg);
    column("total", &IterationSummary::total);
    column("gradient_norm", &IterationSummary::gradientNorm);

    return make_document(kTraceSchema, {{"iterations_executed", trace.iterationsExecuted},
                                        {"termination", to_string(trace.reason)},
                                        {"wall_seconds", trace.wallSeconds},
                                        {"seed", trace.seed},
                                        {"config", format_config(cfg)},
                                        {"series", std::move(series)}});
}

SolveTrace trace_from_json(const json& doc)
{
    SolveTrace trace;
    try {
        trace.iterationsExecuted = doc.at("iterations_executed").get<int>();
        const auto reason = doc.at("termination").get<std::string>();
        bool known = false;
        for (auto r : {Termination::converged, Termination::max_iterations, Termination::diverged}) {
            if (to_string(r) == reason) {
                trace.reason = r;
                known = true;
            }
        }
        if (!known)
            throw ReportError("unknown termination '" + reason + "'");
        trace.wallSeconds = doc.at("wall_seconds").get<double>();
        trace.seed = doc.at("seed").get<std::uint64_t>();
        const json& series = doc.at("series");
        const std::size_t n = series.at("total").size();
        trace.iterations.resize(n);
        auto column = [&](const char* name, double IterationSummary::*field) {
            const json& values = series.at(name);
            if (values.size() != n)
                throw ReportError(std::string("series '") + name + "' has the wrong length");
            for (std::size_t i = 0; i < n; ++i)
                trace.iterations[i].*field = values[i].get<double>();
        };
        column("dc", &IterationSummary::dc);
        column("gc", &IterationSummary::gc);
        column("sms", &IterationSummary::sms);
        column("smooth", &IterationSummary::smooth);
        column("seg", &IterationSummary::seg);
        column("total", &IterationSummary::total);
        column("gradient_norm", &IterationSummary::gradientNorm);
    } catch (const json::exception& e) {
        throw ReportError(std::string("malformed trace report: ") + e.what());
    }
    return trace;
}

nlohmann::json metrics_to_json(const MetricsReport& m)
{
    return make_document(kMetricsSchema, {{"rmse", m.rmse},
                                          {"mae", m.mae},
                                          {"rel", m.rel},
                                          {"delta1", m.delta1},
                                          {"delta2", m.delta2},
                                          {"delta3", m.delta3},
                                          {"irmse", m.irmse},
                                          {"imae", m.imae},
                                          {"evaluated_pixels", m.evaluatedPixels},
                                          {"cap_meters", m.capMeters},
                                          {"prediction_floored", m.predictionFloored}});
}

MetricsReport metrics_from_json(const json& doc)
{
    MetricsReport m;
    try {
        m.rmse = doc.at("rmse").get<double>();
        m.mae = doc.at("mae").get<double>();
        m.rel = doc.at("rel").get<double>();
        m.delta1 = doc.at("delta1").get<double>();
        m.delta2 = doc.at("delta2").get<double>();
        m.delta3 = doc.at("delta3").get<double>();
        m.irmse = doc.at("irmse").get<double>();
        m.imae = doc.at("imae").get<double>();
        m.evaluatedPixels = doc.at("evaluated_pixels").get<std::size_t>();
        m.capMeters = doc.at("cap_meters").get<double>();
        m.predictionFloored = doc.at("prediction_floored").get<bool>();
    } catch (const json::exception& e) {
        throw ReportError(std::string("malformed metrics report: ") + e.what());
    }
    return m;
}

}  // namespace depthprop
