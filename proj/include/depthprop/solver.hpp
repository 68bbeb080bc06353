#pragma once

#include "depthprop/losses.hpp"

#include <cstdint>
#include <functional>

namespace depthprop {

enum class InitMode { nearest_sample, mean_sample, constant };

struct SolverConfig {
    int maxIterations = 2000;
    double learningRate = 1e-3;
    double momentumDecay = 0.9;    // beta1
    double varianceDecay = 0.999;  // beta2
    double epsilon = 1e-8;
    double convergenceTol = 1e-6;  // relative change of the windowed mean objective
    int convergenceWindow = 50;
    InitMode init = InitMode::nearest_sample;
    double initConstant = 1.0;
    double clampMin = 1e-3;
    double clampMax = 10.0;
    std::uint64_t seed = 0;

    /// Indoor range cap (10 m).
    static SolverConfig indoor() { return {}; }
    /// Outdoor range cap (80 m).
    static SolverConfig outdoor()
    {
        SolverConfig cfg;
        cfg.clampMax = 80.0;
        return cfg;
    }

    void validate() const;
};

enum class Termination { converged, max_iterations, diverged };

struct IterationSummary {
    double dc = 0.0;
    double gc = 0.0;
    double sms = 0.0;
    double smooth = 0.0;
    double seg = 0.0;
    double total = 0.0;
    double gradientNorm = 0.0;

    bool operator==(const IterationSummary&) const = default;
};

struct SolveTrace {
    std::vector<IterationSummary> iterations;
    double wallSeconds = 0.0;
    int iterationsExecuted = 0;
    Termination reason = Termination::max_iterations;
    std::uint64_t seed = 0;
};

struct SolveResult {
    DepthField depth;
    SolveTrace trace;
};

/// Starting field for the solver, clamped to [clampMin, clampMax].
DepthField initialize(const SparseDepth& sparse, InitMode mode, Eigen::Index height, Eigen::Index width,
                      const SolverConfig& cfg);

/// Called with each iterate before its objective is evaluated.
using IterateObserver = std::function<void(int iteration, const DepthField& field)>;

/// Bias-corrected adaptive-moment descent on the depth field against the total objective.
/// Top-k selections are re-evaluated at every iteration.
SolveResult solve(const SparseDepth& sparse, const SegmentationMask& mask, const Luminance* image,
                  const LossConfig& lossCfg, const SolverConfig& solverCfg, const IterateObserver& observer = {});

std::string_view to_string(InitMode mode);
std::string_view to_string(Termination reason);
InitMode parse_init_mode(std::string_view text);

}  // namespace depthprop
