#include "depthprop/solver.hpp"

#include <chrono>
#include <cmath>
#include <utility>
#include <limits>

namespace depthprop {

void SolverConfig::validate() const
{
    if (maxIterations < 1)
        throw InvalidInput("maxIterations must be positive");
    if (!(learningRate > 0.0))
        throw InvalidInput("learning rate must be positive");
    if (!(momentumDecay >= 0.0 && momentumDecay < 1.0) || !(varianceDecay >= 0.0 && varianceDecay < 1.0))
        throw InvalidInput("moment decays must lie in [0, 1)");
    if (!(epsilon > 0.0))
        throw InvalidInput("epsilon must be positive");
    if (convergenceWindow < 1 || !(convergenceTol >= 0.0))
        throw InvalidInput("invalid convergence criterion");
    if (!(clampMin < clampMax) || !(clampMin >= 0.0))
        throw InvalidInput("clamp range must satisfy 0 <= clampMin < clampMax");
    if (init == InitMode::constant && !(std::isfinite(initConstant) && initConstant >= 0.0))
        throw InvalidInput("constant initialisation needs a finite non-negative value");
}

DepthField initialize(const SparseDepth& sparse, InitMode mode, Eigen::Index height, Eigen::Index width,
                      const SolverConfig& cfg)
{
    if (height < 2 || width < 2)
        throw InvalidInput("depth field must be at least 2x2");
    DepthField field(height, width);
    switch (mode) {
    case InitMode::constant:
        field.setConstant(cfg.initConstant);
        break;
    case InitMode::mean_sample:
        field.setConstant(sparse.mean_depth());
        break;
    case InitMode::nearest_sample: {
        if (sparse.empty())
            throw InvalidInput("nearest-sample initialisation needs at least one sample");
        const auto& samples = sparse.samples();
        for (Eigen::Index r = 0; r < height; ++r) {
            for (Eigen::Index c = 0; c < width; ++c) {
                // Strict '<' keeps the earliest (row-major) sample on ties.
                Eigen::Index best = std::numeric_limits<Eigen::Index>::max();
                double depth = 0.0;
                for (const auto& s : samples) {
                    const Eigen::Index d2 = (s.row - r) * (s.row - r) + (s.col - c) * (s.col - c);
                    if (d2 < best) {
                        best = d2;
                        depth = s.depth;
                    }
                }
                field(r, c) = depth;
            }
        }
        break;
    }
    }
    return field.cwiseMax(cfg.clampMin).cwiseMin(cfg.clampMax);
}

SolveResult solve(const SparseDepth& sparse, const SegmentationMask& mask, const Luminance* image,
                  const LossConfig& lossCfg, const SolverConfig& solverCfg, const IterateObserver& observer)
{
    lossCfg.validate();
    solverCfg.validate();
    const Eigen::Index h = mask.height();
    const Eigen::Index w = mask.width();
    if (sparse.height() != h || sparse.width() != w)
        throw InvalidInput("sparse depth and mask differ in shape");
    if (image && (image->rows() != h || image->cols() != w))
        throw InvalidInput("luminance image and mask differ in shape");

    const auto start = std::chrono::steady_clock::now();
    SolveResult result;
    result.trace.seed = solverCfg.seed;
    result.trace.iterations.reserve(static_cast<std::size_t>(solverCfg.maxIterations));

    const Objective objective(sparse, mask, image, lossCfg);
    DepthField field = initialize(sparse, solverCfg.init, h, w, solverCfg);
    check_depth_field(field);
    DepthField best = field;
    double bestTotal = std::numeric_limits<double>::infinity();

    DepthField m = DepthField::Zero(h, w);
    DepthField v = DepthField::Zero(h, w);
    double beta1Power = 1.0;
    double beta2Power = 1.0;

    const int window = solverCfg.convergenceWindow;
    double recentSum = 0.0;  // objective sum over the last `window` iterations
    double olderSum = 0.0;   // the `window` iterations before that
    auto& iters = result.trace.iterations;
    LossReport report;
    LossWorkspace ws;

    result.trace.reason = Termination::max_iterations;
    for (int it = 0; it < solverCfg.maxIterations; ++it) {
        if (observer)
            observer(it, field);
        objective.evaluate(field, report, ws);
        // A non-finite gradient entry makes the norm non-finite as well.
        const double gradientNorm = report.gradient.matrix().norm();
        if (!std::isfinite(report.total) || !std::isfinite(gradientNorm)) {
            result.trace.reason = Termination::diverged;
            field = best;
            break;
        }

        iters.push_back({report.dc, report.gc, report.sms, report.smooth, report.seg, report.total,
                         gradientNorm});
        // Divergence falls back to the lowest-objective field seen so far. A new best iterate is
        // swapped into `best` and the step below reads it from there, which avoids a copy.
        const bool improved = report.total < bestTotal;
        if (improved) {
            bestTotal = report.total;
            std::swap(best, field);
        }
        const DepthField& current = improved ? best : field;

        const auto n = static_cast<int>(iters.size());
        recentSum += report.total;
        if (n > window) {
            const double leaving = iters[static_cast<std::size_t>(n - 1 - window)].total;
            recentSum -= leaving;
            olderSum += leaving;
        }
        if (n > 2 * window)
            olderSum -= iters[static_cast<std::size_t>(n - 1 - 2 * window)].total;
        if (n >= 2 * window) {
            const double scale = std::max(std::abs(olderSum), std::numeric_limits<double>::min());
            if (std::abs(recentSum - olderSum) / scale < solverCfg.convergenceTol) {
                result.trace.reason = Termination::converged;
                if (improved)
                    field = best;
                break;
            }
        }

        const DepthField& grad = report.gradient;
        beta1Power *= solverCfg.momentumDecay;
        beta2Power *= solverCfg.varianceDecay;
        m = solverCfg.momentumDecay * m + (1.0 - solverCfg.momentumDecay) * grad;
        v = solverCfg.varianceDecay * v + (1.0 - solverCfg.varianceDecay) * grad.square();
        const double stepScale = solverCfg.learningRate / (1.0 - beta1Power);
        const double varianceCorrection = 1.0 / (1.0 - beta2Power);
        field = (current - stepScale * m / ((v * varianceCorrection).sqrt() + solverCfg.epsilon))
                    .cwiseMax(solverCfg.clampMin)
                    .cwiseMin(solverCfg.clampMax);
    }

    result.trace.iterationsExecuted = static_cast<int>(iters.size());
    result.depth = std::move(field);
    result.trace.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string_view to_string(InitMode mode)
{
    switch (mode) {
    case InitMode::nearest_sample:
        return "nearest_sample";
    case InitMode::mean_sample:
        return "mean_sample";
    case InitMode::constant:
        return "constant";
    }
    return "nearest_sample";
}

std::string_view to_string(Termination reason)
{
    switch (reason) {
    case Termination::converged:
        return "converged";
    case Termination::max_iterations:
        return "max_iterations";
    case Termination::diverged:
        return "diverged";
    }
    return "max_iterations";
}

InitMode parse_init_mode(std::string_view text)
{
    for (auto m : {InitMode::nearest_sample, InitMode::mean_sample, InitMode::constant})
        if (to_string(m) == text)
            return m;
    throw InvalidInput("unknown init mode '" + std::string(text) + "'");
}

}  // namespace depthprop
