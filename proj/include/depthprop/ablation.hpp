#pragma once

#include "depthprop/losses.hpp"
#include "depthprop/metrics.hpp"
#include "depthprop/scenegen.hpp"
#include "depthprop/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace depthprop {

/// A fixed family of synthetic scenes. Scene i uses layout i mod 3 and 3 + (i mod 5) regions.
struct SuiteSpec {
    int sceneCount = 10;
    Eigen::Index size = 128;
    double sampleFraction = 0.02;
    TextureMode texture = TextureMode::per_region_shade;
    std::uint64_t seed = 0;

    Eigen::Index sample_count() const;
};

std::vector<SceneSpec> make_suite(const SuiteSpec& suite);

struct AblationCase {
    std::string id;
    std::string label;
    LossConfig loss;
    bool textured = false;  // run on the noise_texture suite instead of the standard one
};

/// Expects median RMSE to decrease along `chain` (worst first). With `strict` false, equal
/// medians pass. `minPairFraction` > 0 additionally requires every adjacent comparison to hold
/// on at least that fraction of (scene, seed) pairs.
struct OrderingCheck {
    std::string id;
    std::string description;
    std::vector<std::string> chain;
    bool strict = true;
    double minPairFraction = 0.0;
};

/// Expects median RMSE of `to` to be at most (1 - minRelative) times that of `from`.
struct ImprovementCheck {
    std::string id;
    std::string description;
    std::string from;
    std::string to;
    double minRelative = 0.5;
};

struct Study {
    std::string id;
    std::string title;
    std::vector<AblationCase> cases;
    std::vector<OrderingCheck> orderings;
    std::vector<ImprovementCheck> improvements;

    const AblationCase& find(const std::string& caseId) const;
};

/// Term combinations: "seg on" rows select mask-guided rules, the other rows image-guided ones.
Study term_study();
/// Constraint window sizes and the mask/image constraint basis.
Study window_study();
/// Smoothness variants alongside the mask-guided constraint.
Study smoothness_study();
/// Whole-system mask guidance against image guidance on textured scenes.
Study guidance_study();
std::vector<Study> all_studies();

struct AblationOptions {
    SolverConfig solver;
    std::vector<std::uint64_t> seeds;
    SuiteSpec standard;
    SuiteSpec textured;
    /// Restricts a study to these case ids (all cases when empty).
    std::vector<std::string> only;
    std::function<void(const std::string&)> progress;

    /// Twenty seeds, the standard suite, its noise_texture twin and the sweep solver settings.
    static AblationOptions defaults();
};

/// Solver settings used for every sweep run: mean-sample start so that the baseline has no
/// propagation of its own, and a step size that lets propagation finish inside the budget.
SolverConfig sweep_solver_config();

struct CaseResult {
    std::string id;
    std::vector<MetricsReport> runs;  // scene-major, then seed
    MetricsReport median;
    int diverged = 0;
};

struct CheckResult {
    std::string id;
    std::string description;
    bool medianHolds = false;
    std::vector<double> pairFractions;  // ordering checks: one per adjacent comparison
    double relativeImprovement = 0.0;   // improvement checks only
    bool passed = false;
};

struct StudyResult {
    std::string id;
    std::string title;
    std::vector<CaseResult> cases;
    std::vector<CheckResult> checks;
    double wallSeconds = 0.0;

    bool passed() const;
    const CaseResult& find(const std::string& caseId) const;
};

/// Element-wise median of each metric field; even counts average the two middle values.
MetricsReport median_metrics(const std::vector<MetricsReport>& runs);

StudyResult run_study(const Study& study, const AblationOptions& options);

/// Checks are skipped (and reported as such) when a case they need was not run.
std::vector<CheckResult> evaluate_checks(const Study& study, const std::vector<CaseResult>& cases);

nlohmann::json ablation_to_json(const std::vector<StudyResult>& results, const AblationOptions& options);

}  // namespace depthprop
