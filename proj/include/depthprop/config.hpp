#pragma once

#include "depthprop/losses.hpp"
#include "depthprop/scenegen.hpp"
#include "depthprop/solver.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace depthprop {

/// Bad key, value or syntax in a run configuration. `line` is 0 for settings given as flags.
class ConfigError : public InvalidInput {
  public:
    ConfigError(const std::string& what, std::size_t line = 0);
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

/// Everything a CLI run needs. Scene planes are drawn from `scene.seed` when not given.
struct RunConfig {
    SceneSpec scene;
    SamplingSpec sampling;
    LossConfig loss;
    SolverConfig solver;
    double capMeters = 10.0;

    void validate() const;
};

/// Keys accepted by apply_setting(), in documentation order.
const std::vector<std::string_view>& config_keys();

/// Sets one `section.key` from its textual value. Throws ConfigError for unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Parses `section.key = value` lines on top of `base`. Blank lines and lines starting with '#'
/// are skipped. Repeating a key is an error.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Renders every key so that parse_config(format_config(c)) reproduces c.
std::string format_config(const RunConfig& cfg);

}  // namespace depthprop
