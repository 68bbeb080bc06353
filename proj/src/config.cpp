#include "depthprop/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace depthprop {

ConfigError::ConfigError(const std::string& what, std::size_t line)
    : InvalidInput(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
{
}

void RunConfig::validate() const
{
    // Config scenes carry no planes; gen-scene draws them from the seed.
    SceneSpec withPlanes = scene;
    withPlanes.planes.assign(static_cast<std::size_t>(std::max(scene.regionCount, 0)), Plane{});
    withPlanes.validate();
    if (sampling.count < 1)
        throw InvalidInput("sampling.count must be positive");
    loss.validate();
    solver.validate();
    if (!(capMeters > 0.0))
        throw InvalidInput("eval.cap must be positive");
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
    return value;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    if (text == "true")
        return true;
    if (text == "false")
        return false;
    throw ConfigError("expected true or false for " + std::string(key) + ", got '" + std::string(text) + "'");
}

template <typename T>
std::string number_text(T value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

// Wraps enum parsers so their errors name the offending key.
template <typename F>
auto parse_named(std::string_view key, std::string_view text, F parse)
{
    try {
        return parse(text);
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

struct Setting {
    std::string_view key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define DP_NUMBER(KEY, FIELD)                                                                         \
    Setting                                                                                           \
    {                                                                                                 \
        KEY, [](RunConfig& c, std::string_view v) { c.FIELD = parse_number<decltype(c.FIELD)>(KEY, v); }, \
            [](const RunConfig& c) { return number_text(c.FIELD); }                                   \
    }

const std::vector<Setting>& settings()
{
    static const std::vector<Setting> table = {
        DP_NUMBER("scene.height", scene.height),
        DP_NUMBER("scene.width", scene.width),
        DP_NUMBER("scene.regions", scene.regionCount),
        {"scene.layout",
         [](RunConfig& c, std::string_view v) { c.scene.layout = parse_named("scene.layout", v, parse_layout); },
         [](const RunConfig& c) { return std::string(to_string(c.scene.layout)); }},
        DP_NUMBER("scene.depth_min", scene.depthMin),
        DP_NUMBER("scene.depth_max", scene.depthMax),
        {"scene.texture",
         [](RunConfig& c, std::string_view v) {
             c.scene.texture = parse_named("scene.texture", v, parse_texture_mode);
         },
         [](const RunConfig& c) { return std::string(to_string(c.scene.texture)); }},
        DP_NUMBER("scene.noise_std", scene.noiseStd),
        DP_NUMBER("scene.seed", scene.seed),
        {"sampling.protocol",
         [](RunConfig& c, std::string_view v) {
             c.sampling.protocol = parse_named("sampling.protocol", v, parse_sampling_protocol);
         },
         [](const RunConfig& c) { return std::string(to_string(c.sampling.protocol)); }},
        DP_NUMBER("sampling.count", sampling.count),
        {"loss.terms",
         [](RunConfig& c, std::string_view v) { c.loss.terms = parse_named("loss.terms", v, TermSet::parse); },
         [](const RunConfig& c) { return c.loss.terms.to_string(); }},
        DP_NUMBER("loss.alpha", loss.alpha),
        {"gc.window",
         [](RunConfig& c, std::string_view v) {
             c.loss.gc.windowSize = v == "full" ? GcConfig::kFullWindow : parse_number<Eigen::Index>("gc.window", v);
         },
         [](const RunConfig& c) {
             return c.loss.gc.windowSize == GcConfig::kFullWindow ? std::string("full")
                                                                   : number_text(c.loss.gc.windowSize);
         }},
        DP_NUMBER("gc.fraction", loss.gc.selectFraction),
        {"gc.basis",
         [](RunConfig& c, std::string_view v) {
             c.loss.gc.basis = parse_named("gc.basis", v, parse_constraint_basis);
         },
         [](const RunConfig& c) { return std::string(to_string(c.loss.gc.basis)); }},
        {"gc.edge_exclusion",
         [](RunConfig& c, std::string_view v) { c.loss.gc.edgeExclusion = parse_bool("gc.edge_exclusion", v); },
         [](const RunConfig& c) { return std::string(c.loss.gc.edgeExclusion ? "true" : "false"); }},
        DP_NUMBER("sms.fraction", loss.sms.selectFraction),
        {"sms.variant",
         [](RunConfig& c, std::string_view v) {
             c.loss.sms.variant = parse_named("sms.variant", v, parse_smoothness_variant);
         },
         [](const RunConfig& c) { return std::string(to_string(c.loss.sms.variant)); }},
        {"sms.split_connected",
         [](RunConfig& c, std::string_view v) {
             c.loss.sms.splitConnected = parse_bool("sms.split_connected", v);
         },
         [](const RunConfig& c) { return std::string(c.loss.sms.splitConnected ? "true" : "false"); }},
        DP_NUMBER("solver.max_iterations", solver.maxIterations),
        DP_NUMBER("solver.learning_rate", solver.learningRate),
        DP_NUMBER("solver.beta1", solver.momentumDecay),
        DP_NUMBER("solver.beta2", solver.varianceDecay),
        DP_NUMBER("solver.epsilon", solver.epsilon),
        DP_NUMBER("solver.tol", solver.convergenceTol),
        DP_NUMBER("solver.window", solver.convergenceWindow),
        {"solver.init",
         [](RunConfig& c, std::string_view v) { c.solver.init = parse_named("solver.init", v, parse_init_mode); },
         [](const RunConfig& c) { return std::string(to_string(c.solver.init)); }},
        DP_NUMBER("solver.init_constant", solver.initConstant),
        DP_NUMBER("solver.clamp_min", solver.clampMin),
        DP_NUMBER("solver.clamp_max", solver.clampMax),
        DP_NUMBER("solver.seed", solver.seed),
        DP_NUMBER("eval.cap", capMeters),
    };
    return table;
}

#undef DP_NUMBER

}  // namespace

const std::vector<std::string_view>& config_keys()
{
    static const std::vector<std::string_view> keys = [] {
        std::vector<std::string_view> out;
        for (const Setting& s : settings())
            out.push_back(s.key);
        return out;
    }();
    return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value)
{
    for (const Setting& s : settings()) {
        if (s.key == key) {
            s.set(cfg, trim(value));
            return;
        }
    }
    throw ConfigError("unknown key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base)
{
    std::set<std::string, std::less<>> seen;
    std::size_t lineNo = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        const std::string_view line = trim(text.substr(start, end - start));
        start = end + 1;
        ++lineNo;
        if (line.empty() || line.front() == '#')
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("expected 'section.key = value'", lineNo);
        const std::string_view key = trim(line.substr(0, eq));
        if (!seen.emplace(key).second)
            throw ConfigError("duplicate key '" + std::string(key) + "'", lineNo);
        try {
            apply_setting(base, key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), lineNo);
        }
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), std::move(base));
}

std::string format_config(const RunConfig& cfg)
{
    std::string out;
    for (const Setting& s : settings()) {
        out += s.key;
        out += " = ";
        out += s.get(cfg);
        out += '\n';
    }
    return out;
}

}  // namespace depthprop
