#include "depthprop/ablation.hpp"

#include "depthprop/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace depthprop {

Eigen::Index SuiteSpec::sample_count() const
{
    return std::max<Eigen::Index>(1, std::llround(sampleFraction * static_cast<double>(size * size)));
}

std::vector<SceneSpec> make_suite(const SuiteSpec& suite)
{
    if (suite.sceneCount < 1 || suite.size < 8 || !(suite.sampleFraction > 0.0 && suite.sampleFraction <= 1.0))
        throw InvalidInput("suite needs at least one scene of side >= 8 and a sample fraction in (0, 1]");
    std::vector<SceneSpec> scenes;
    for (int i = 0; i < suite.sceneCount; ++i) {
        SceneSpec spec;
        spec.height = spec.width = suite.size;
        spec.regionCount = 3 + i % 5;
        spec.layout = static_cast<Layout>(i % 3);
        spec.depthMin = 1.0;
        spec.depthMax = 8.0;
        spec.texture = suite.texture;
        spec.seed = suite.seed * 1000 + static_cast<std::uint64_t>(i);
        spec.planes = random_planes(spec.regionCount, spec.height, spec.width, 1.5, 7.0, spec.seed + 500);
        scenes.push_back(std::move(spec));
    }
    return scenes;
}

const AblationCase& Study::find(const std::string& caseId) const
{
    for (const AblationCase& c : cases)
        if (c.id == caseId)
            return c;
    throw InvalidInput("study " + id + " has no case '" + caseId + "'");
}

namespace {

LossConfig losses(TermSet terms, ConstraintBasis basis, SmoothnessVariant variant,
                  Eigen::Index window = GcConfig{}.windowSize)
{
    LossConfig cfg;
    cfg.terms = terms;
    cfg.gc.basis = basis;
    cfg.gc.windowSize = window;
    cfg.sms.variant = variant;
    return cfg;
}

constexpr auto kMask = ConstraintBasis::mask;
constexpr auto kImage = ConstraintBasis::image;
constexpr auto kSelective = SmoothnessVariant::selective_mask;

}  // namespace

Study term_study()
{
    // Without a learned segmentation branch the seg term only shifts the objective by a constant.
    // Its rows therefore switch the remaining terms to mask-guided rules, and the other rows use
    // the image-guided counterparts.
    const TermSet dc{Term::dc};
    const TermSet dcSms{Term::dc, Term::sms};
    const TermSet dcGc{Term::dc, Term::gc};
    const TermSet all{Term::dc, Term::gc, Term::sms};
    const auto imageSmooth = SmoothnessVariant::image_smooth;
    Study s;
    s.id = "terms";
    s.title = "Loss term combinations";
    s.cases = {
        {"dc", "dc", losses(dc, kImage, imageSmooth), false},
        {"dc+seg", "dc, mask guidance (no term uses it)", losses(dc, kMask, kSelective), false},
        {"dc+sms", "dc + image-guided smoothness", losses(dcSms, kImage, imageSmooth), false},
        {"dc+gc", "dc + image-basis constraint", losses(dcGc, kImage, imageSmooth), false},
        {"dc+seg+sms", "dc + selective mask smoothness", losses(dcSms, kMask, kSelective), false},
        {"dc+seg+gc", "dc + mask-basis constraint", losses(dcGc, kMask, kSelective), false},
        {"dc+sms+gc", "dc + image-guided smoothness + image-basis constraint", losses(all, kImage, imageSmooth),
         false},
        {"dc+seg+sms+gc", "dc + selective mask smoothness + mask-basis constraint", losses(all, kMask, kSelective),
         false},
    };
    s.orderings = {{"terms-order", "dc > dc+sms > dc+gc > dc+seg+sms+gc (median RMSE, >= 80% of pairs)",
                    {"dc", "dc+sms", "dc+gc", "dc+seg+sms+gc"}, true, 0.8}};
    s.improvements = {{"gc-gain", "dc+gc improves median RMSE over dc by at least 50%", "dc", "dc+gc", 0.5}};
    return s;
}

Study window_study()
{
    const TermSet all{Term::dc, Term::gc, Term::sms};
    Study s;
    s.id = "windows";
    s.title = "Constraint window size and basis";
    s.cases = {
        {"window-full", "whole-field window, mask basis", losses(all, kMask, kSelective, GcConfig::kFullWindow), false},
        {"window-64", "64x64 windows, mask basis", losses(all, kMask, kSelective, 64), false},
        {"window-16", "16x16 windows, mask basis", losses(all, kMask, kSelective, 16), false},
        {"window-8", "8x8 windows, mask basis", losses(all, kMask, kSelective, 8), false},
        {"basis-mask", "8x8 windows, mask basis, textured scenes", losses(all, kMask, kSelective, 8), true},
        {"basis-image", "8x8 windows, image basis, textured scenes", losses(all, kImage, kSelective, 8), true},
    };
    s.orderings = {
        {"window-order", "median RMSE non-increasing over full, 64, 16, 8",
         {"window-full", "window-64", "window-16", "window-8"}, false, 0.0},
        {"basis-order", "mask basis <= image basis at 8x8 on textured scenes", {"basis-image", "basis-mask"}, false,
         0.0},
    };
    return s;
}

Study smoothness_study()
{
    const TermSet all{Term::dc, Term::gc, Term::sms};
    Study s;
    s.id = "smoothness";
    s.title = "Smoothness variants";
    s.cases = {
        {"image-smooth", "edge-aware smoothness on the image", losses(all, kMask, SmoothnessVariant::image_smooth),
         false},
        {"mask-smooth", "edge-aware smoothness on the mask", losses(all, kMask, SmoothnessVariant::mask_smooth),
         false},
        {"mask-all", "all intra-region gradients", losses(all, kMask, SmoothnessVariant::mask_all_gradients), false},
        {"selective", "top 40% intra-region gradients", losses(all, kMask, kSelective), false},
    };
    s.orderings = {{"smoothness-order", "selective <= mask-all <= mask-smooth <= image-smooth (median RMSE)",
                    {"image-smooth", "mask-smooth", "mask-all", "selective"}, false, 0.0}};
    return s;
}

Study guidance_study()
{
    const TermSet all{Term::dc, Term::gc, Term::sms};
    Study s;
    s.id = "guidance";
    s.title = "Mask against image guidance";
    s.cases = {
        {"image", "image basis + image-guided smoothness, textured scenes",
         losses(all, kImage, SmoothnessVariant::image_smooth), true},
        {"mask", "mask basis + selective mask smoothness, textured scenes", losses(all, kMask, kSelective), true},
    };
    s.orderings = {{"guidance-order", "mask guidance beats image guidance by a positive median margin",
                    {"image", "mask"}, true, 0.0}};
    return s;
}

std::vector<Study> all_studies()
{
    return {term_study(), window_study(), smoothness_study(), guidance_study()};
}

SolverConfig sweep_solver_config()
{
    SolverConfig cfg;
    cfg.init = InitMode::mean_sample;
    cfg.learningRate = 0.05;
    return cfg;
}

AblationOptions AblationOptions::defaults()
{
    AblationOptions o;
    o.solver = sweep_solver_config();
    for (std::uint64_t s = 0; s < 20; ++s)
        o.seeds.push_back(s);
    o.textured.texture = TextureMode::noise_texture;
    return o;
}

MetricsReport median_metrics(const std::vector<MetricsReport>& runs)
{
    if (runs.empty())
        throw InvalidInput("median of no runs");
    std::vector<double> values(runs.size());
    auto median = [&](double MetricsReport::*field) {
        for (std::size_t i = 0; i < runs.size(); ++i)
            values[i] = runs[i].*field;
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    };
    MetricsReport m;
    m.rmse = median(&MetricsReport::rmse);
    m.mae = median(&MetricsReport::mae);
    m.rel = median(&MetricsReport::rel);
    m.delta1 = median(&MetricsReport::delta1);
    m.delta2 = median(&MetricsReport::delta2);
    m.delta3 = median(&MetricsReport::delta3);
    m.irmse = median(&MetricsReport::irmse);
    m.imae = median(&MetricsReport::imae);
    m.capMeters = runs.front().capMeters;
    m.evaluatedPixels = runs.front().evaluatedPixels;
    m.predictionFloored = std::any_of(runs.begin(), runs.end(), [](const auto& r) { return r.predictionFloored; });
    return m;
}

bool StudyResult::passed() const
{
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const CaseResult& StudyResult::find(const std::string& caseId) const
{
    for (const CaseResult& c : cases)
        if (c.id == caseId)
            return c;
    throw InvalidInput("study result " + id + " has no case '" + caseId + "'");
}

StudyResult run_study(const Study& study, const AblationOptions& options)
{
    if (options.seeds.empty())
        throw InvalidInput("ablation needs at least one seed");
    options.solver.validate();
    const auto start = std::chrono::steady_clock::now();

    std::vector<const AblationCase*> selected;
    for (const AblationCase& c : study.cases)
        if (options.only.empty() || std::find(options.only.begin(), options.only.end(), c.id) != options.only.end())
            selected.push_back(&c);

    StudyResult result;
    result.id = study.id;
    result.title = study.title;
    for (const AblationCase* c : selected)
        result.cases.push_back({c->id, {}, {}, 0});

    for (const bool textured : {false, true}) {
        if (std::none_of(selected.begin(), selected.end(), [&](const auto* c) { return c->textured == textured; }))
            continue;
        const SuiteSpec& suite = textured ? options.textured : options.standard;
        const std::vector<SceneSpec> specs = make_suite(suite);
        for (std::size_t si = 0; si < specs.size(); ++si) {
            const Scene scene = generate_scene(specs[si]);
            for (std::uint64_t seed : options.seeds) {
                const SparseDepth sparse = sample_sparse(
                    scene.depth, {SamplingProtocol::uniform_random, suite.sample_count()}, specs[si].noiseStd,
                    specs[si].seed * 7919 + seed);
                SolverConfig solverCfg = options.solver;
                solverCfg.seed = seed;
                for (std::size_t ci = 0; ci < selected.size(); ++ci) {
                    if (selected[ci]->textured != textured)
                        continue;
                    const SolveResult run = solve(sparse, scene.mask, &scene.image, selected[ci]->loss, solverCfg);
                    CaseResult& out = result.cases[ci];
                    out.diverged += run.trace.reason == Termination::diverged;
                    out.runs.push_back(evaluate(run.depth, scene.depth, kIndoorCapMeters));
                }
                if (options.progress)
                    options.progress(study.id + ": scene " + std::to_string(si) + " seed " + std::to_string(seed)
                                     + (textured ? " (textured)" : ""));
            }
        }
    }
    for (CaseResult& c : result.cases)
        c.median = median_metrics(c.runs);
    result.checks = evaluate_checks(study, result.cases);
    result.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::vector<CheckResult> evaluate_checks(const Study& study, const std::vector<CaseResult>& cases)
{
    auto lookup = [&](const std::string& caseId) -> const CaseResult* {
        for (const CaseResult& c : cases)
            if (c.id == caseId)
                return &c;
        return nullptr;
    };

    std::vector<CheckResult> out;
    for (const OrderingCheck& o : study.orderings) {
        std::vector<const CaseResult*> chain;
        for (const std::string& caseId : o.chain)
            chain.push_back(lookup(caseId));
        if (std::find(chain.begin(), chain.end(), nullptr) != chain.end())
            continue;
        CheckResult r{o.id, o.description, true, {}, 0.0, false};
        bool fractionsHold = true;
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
            const CaseResult& worse = *chain[i];
            const CaseResult& better = *chain[i + 1];
            const double a = worse.median.rmse;
            const double b = better.median.rmse;
            r.medianHolds = r.medianHolds && (o.strict ? a > b : a >= b);
            if (worse.runs.size() != better.runs.size())
                throw InvalidInput("cases " + worse.id + " and " + better.id + " ran on different pairs");
            std::size_t holds = 0;
            for (std::size_t k = 0; k < worse.runs.size(); ++k) {
                const double x = worse.runs[k].rmse;
                const double y = better.runs[k].rmse;
                holds += o.strict ? x > y : x >= y;
            }
            const double fraction = static_cast<double>(holds) / static_cast<double>(worse.runs.size());
            r.pairFractions.push_back(fraction);
            fractionsHold = fractionsHold && fraction >= o.minPairFraction;
        }
        r.passed = r.medianHolds && fractionsHold;
        out.push_back(std::move(r));
    }
    for (const ImprovementCheck& imp : study.improvements) {
        const CaseResult* from = lookup(imp.from);
        const CaseResult* to = lookup(imp.to);
        if (!from || !to)
            continue;
        CheckResult r{imp.id, imp.description, false, {}, 0.0, false};
        r.relativeImprovement = 1.0 - to->median.rmse / from->median.rmse;
        r.medianHolds = r.relativeImprovement >= imp.minRelative;
        r.passed = r.medianHolds;
        out.push_back(std::move(r));
    }
    return out;
}

nlohmann::json ablation_to_json(const std::vector<StudyResult>& results, const AblationOptions& options)
{
    using nlohmann::json;
    json studies = json::array();
    for (const StudyResult& s : results) {
        json cases = json::array();
        for (const CaseResult& c : s.cases) {
            json rmse = json::array();
            for (const MetricsReport& m : c.runs)
                rmse.push_back(m.rmse);
            json median = metrics_to_json(c.median);
            median.erase("schema");
            median.erase("version");
            cases.push_back({{"id", c.id}, {"median", std::move(median)}, {"diverged", c.diverged},
                             {"rmse_per_run", std::move(rmse)}});
        }
        json checks = json::array();
        for (const CheckResult& c : s.checks)
            checks.push_back({{"id", c.id},
                              {"description", c.description},
                              {"median_holds", c.medianHolds},
                              {"pair_fractions", c.pairFractions},
                              {"relative_improvement", c.relativeImprovement},
                              {"passed", c.passed}});
        studies.push_back({{"id", s.id},
                           {"title", s.title},
                           {"wall_seconds", s.wallSeconds},
                           {"cases", std::move(cases)},
                           {"checks", std::move(checks)}});
    }
    json seeds = options.seeds;
    return make_document(kAblationSchema, {{"seeds", std::move(seeds)},
                                           {"scenes", options.standard.sceneCount},
                                           {"scene_size", options.standard.size},
                                           {"sample_fraction", options.standard.sampleFraction},
                                           {"learning_rate", options.solver.learningRate},
                                           {"init", to_string(options.solver.init)},
                                           {"max_iterations", options.solver.maxIterations},
                                           {"studies", std::move(studies)}});
}

}  // namespace depthprop
