// depthprop command-line front end.
//
// Exit codes: 0 success, 2 input or configuration error, 3 solver divergence.

#include "depthprop/ablation.hpp"
#include "depthprop/config.hpp"
#include "depthprop/io.hpp"
#include "depthprop/metrics.hpp"
#include "depthprop/report.hpp"
#include "depthprop/scenegen.hpp"
#include "depthprop/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using namespace depthprop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDiverged = 3;

/// Flag values recorded as config settings so they can be layered over a config file.
struct Overrides {
    std::vector<std::pair<std::string, std::string>> settings;
    std::string configFile;

    void bind(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help)
    {
        app.add_option_function<std::string>(
            flag, [this, key](const std::string& v) { settings.emplace_back(key, v); }, help + " [" + key + "]");
    }

    RunConfig resolve(RunConfig base) const
    {
        RunConfig cfg = configFile.empty() ? std::move(base) : load_config(configFile, std::move(base));
        for (const auto& [key, value] : settings)
            apply_setting(cfg, key, value);
        cfg.validate();
        return cfg;
    }
};

void bind_size(CLI::App& app, Overrides& o)
{
    app.add_option_function<std::string>(
        "--size",
        [&o](const std::string& v) {
            const auto x = v.find('x');
            if (x == std::string::npos)
                throw CLI::ValidationError("--size", "expected HEIGHTxWIDTH, e.g. 64x64");
            o.settings.emplace_back("scene.height", v.substr(0, x));
            o.settings.emplace_back("scene.width", v.substr(x + 1));
        },
        "Scene size as HEIGHTxWIDTH");
}

void bind_solver_flags(CLI::App& app, Overrides& o)
{
    o.bind(app, "--terms", "loss.terms", "Enabled loss terms, e.g. dc,gc,sms");
    o.bind(app, "--alpha", "loss.alpha", "Weight of the seg term");
    o.bind(app, "--gc-window", "gc.window", "Constraint window side, or 'full'");
    o.bind(app, "--gc-fraction", "gc.fraction", "Fraction of window pixels penalised");
    o.bind(app, "--gc-basis", "gc.basis", "Constraint basis: mask or image");
    o.bind(app, "--sms-fraction", "sms.fraction", "Fraction of region gradients penalised");
    o.bind(app, "--sms-variant", "sms.variant",
           "selective_mask, mask_all_gradients, mask_smooth or image_smooth");
    o.bind(app, "--iterations", "solver.max_iterations", "Iteration cap");
    o.bind(app, "--lr", "solver.learning_rate", "Step size");
    o.bind(app, "--init", "solver.init", "nearest_sample, mean_sample or constant");
    o.bind(app, "--init-constant", "solver.init_constant", "Start value for --init constant");
    o.bind(app, "--tol", "solver.tol", "Relative convergence tolerance");
    o.bind(app, "--clamp-min", "solver.clamp_min", "Lower depth clamp in meters");
    o.bind(app, "--clamp-max", "solver.clamp_max", "Upper depth clamp in meters");
    o.bind(app, "--cap", "eval.cap", "Evaluation depth cap in meters");
}

void ensure_parent(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
}

void print_metrics(const MetricsReport& m)
{
    std::printf("rmse %.6f  mae %.6f  rel %.6f  delta1 %.4f  delta2 %.4f  delta3 %.4f  irmse %.4f  imae %.4f"
                "  pixels %zu\n",
                m.rmse, m.mae, m.rel, m.delta1, m.delta2, m.delta3, m.irmse, m.imae, m.evaluatedPixels);
}

int run_gen_scene(const Overrides& o, const fs::path& outDir)
{
    RunConfig defaults;
    defaults.scene.regionCount = 2;
    const RunConfig cfg = o.resolve(defaults);

    SceneSpec spec = cfg.scene;
    spec.planes = random_planes(spec.regionCount, spec.height, spec.width, spec.depthMin, spec.depthMax, spec.seed);
    if (cfg.sampling.count > spec.height * spec.width)
        throw InvalidInput("--samples " + std::to_string(cfg.sampling.count) + " exceeds the "
                           + std::to_string(spec.height * spec.width) + " pixels of the scene");
    const Scene scene = generate_scene(spec);
    const SparseDepth sparse = sample_sparse(scene.depth, cfg.sampling, spec.noiseStd, spec.seed + 1);

    std::error_code ec;
    fs::create_directories(outDir, ec);
    if (ec)
        throw InvalidInput("cannot create output directory " + outDir.string() + ": " + ec.message());
    const fs::path gt = outDir / "gt.pfm";
    const fs::path mask = outDir / "mask.pgm";
    const fs::path image = outDir / "image.pfm";
    const fs::path samples = outDir / "sparse.csv";
    io::write_depth(scene.depth, gt);
    io::write_mask(scene.mask, mask);
    io::write_luminance(scene.image, image);
    io::write_sparse_csv(sparse, samples);
    std::printf("gt_depth %s %ldx%ld\n", gt.string().c_str(), static_cast<long>(spec.height),
                static_cast<long>(spec.width));
    std::printf("mask %s %d regions\n", mask.string().c_str(), spec.regionCount);
    std::printf("image %s %s\n", image.string().c_str(), std::string(to_string(spec.texture)).c_str());
    std::printf("sparse %s %zu samples\n", samples.string().c_str(), sparse.size());
    if (scene.clipped)
        std::fprintf(stderr, "warning: some plane depths were clipped to [%g, %g]\n", spec.depthMin,
                     spec.depthMax);
    return kExitOk;
}

struct CompleteArgs {
    std::string sparse;
    std::string mask;
    std::string image;
    std::string gt;
    std::string out = "completed.pfm";
    std::string trace;
    std::string metrics;
};

int run_complete(const Overrides& o, const CompleteArgs& a)
{
    const RunConfig cfg = o.resolve({});
    const SegmentationMask mask = io::read_mask(a.mask);
    const SparseDepth sparse = fs::path(a.sparse).extension() == ".csv"
                                   ? io::read_sparse_csv(a.sparse, mask.height(), mask.width())
                                   : io::read_sparse_depth(a.sparse);
    if (sparse.height() != mask.height() || sparse.width() != mask.width())
        throw InvalidInput("sparse depth and mask differ in shape");
    std::optional<Luminance> image;
    if (!a.image.empty())
        image = io::read_luminance(a.image);

    const SolveResult result = solve(sparse, mask, image ? &*image : nullptr, cfg.loss, cfg.solver);
    const bool diverged = result.trace.reason == Termination::diverged;
    ensure_parent(a.out);
    try {
        io::write_depth(result.depth, a.out);
    } catch (const io::FormatError& e) {
        // A diverged run's best field may not fit 32-bit floats; divergence is the error to report.
        if (!diverged)
            throw;
        std::fprintf(stderr, "warning: best field not written: %s\n", e.what());
    }
    std::printf("completed %s  %d iterations  %s  %.2fs\n", a.out.c_str(), result.trace.iterationsExecuted,
                std::string(to_string(result.trace.reason)).c_str(), result.trace.wallSeconds);
    if (!a.trace.empty()) {
        ensure_parent(a.trace);
        write_document(a.trace, trace_to_json(result.trace, cfg));
    }
    if (!a.gt.empty()) {
        const DepthField gt = io::read_dense_depth(a.gt);
        const MetricsReport m = evaluate(result.depth, gt, cfg.capMeters);
        print_metrics(m);
        if (!a.metrics.empty()) {
            ensure_parent(a.metrics);
            write_document(a.metrics, metrics_to_json(m));
        }
    }
    if (diverged) {
        std::fprintf(stderr, "error: solver diverged after %d iterations\n", result.trace.iterationsExecuted);
        return kExitDiverged;
    }
    return kExitOk;
}

int run_eval(const std::string& pred, const std::string& gtPath, double cap, const std::string& out)
{
    const DepthField prediction = io::read_dense_depth(pred);
    const io::DepthData gtData = io::read_depth(gtPath);
    MetricsReport m;
    if (const auto* dense = std::get_if<DepthField>(&gtData)) {
        m = evaluate(prediction, *dense, cap);
    } else {
        // Missing ground-truth pixels are encoded as 0, which the (0, cap] filter skips.
        const auto& sparse = std::get<SparseDepth>(gtData);
        DepthField gt = DepthField::Zero(sparse.height(), sparse.width());
        for (const auto& s : sparse.samples())
            gt(s.row, s.col) = s.depth;
        m = evaluate(prediction, gt, cap);
    }
    print_metrics(m);
    if (!out.empty()) {
        ensure_parent(out);
        write_document(out, metrics_to_json(m));
    }
    return kExitOk;
}

struct AblateArgs {
    std::vector<std::string> studies{"all"};
    int seeds = 20;
    int scenes = 10;
    int size = 128;
    int iterations = 0;
    double lr = 0.0;
    std::string out = "ablation.json";
    bool quiet = false;
};

int run_ablate(const AblateArgs& a)
{
    AblationOptions options = AblationOptions::defaults();
    if (a.seeds < 1 || a.scenes < 1 || a.size < 8)
        throw InvalidInput("--seeds and --scenes must be positive and --size at least 8");
    options.seeds.clear();
    for (int s = 0; s < a.seeds; ++s)
        options.seeds.push_back(static_cast<std::uint64_t>(s));
    options.standard.sceneCount = options.textured.sceneCount = a.scenes;
    options.standard.size = options.textured.size = a.size;
    if (a.iterations > 0)
        options.solver.maxIterations = a.iterations;
    if (a.lr > 0.0)
        options.solver.learningRate = a.lr;
    if (!a.quiet)
        options.progress = [](const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); };

    std::vector<Study> studies;
    for (const Study& s : all_studies())
        if (std::find(a.studies.begin(), a.studies.end(), "all") != a.studies.end()
            || std::find(a.studies.begin(), a.studies.end(), s.id) != a.studies.end())
            studies.push_back(s);
    if (studies.empty())
        throw InvalidInput("no study matches; choose from terms, windows, smoothness, guidance, all");

    std::vector<StudyResult> results;
    for (const Study& s : studies) {
        results.push_back(run_study(s, options));
        const StudyResult& r = results.back();
        std::printf("\n%s (%s, %.0fs)\n", r.title.c_str(), r.id.c_str(), r.wallSeconds);
        std::printf("  %-16s %10s %10s %10s %9s\n", "case", "rmse", "rel", "delta1", "diverged");
        for (const CaseResult& c : r.cases)
            std::printf("  %-16s %10.5f %10.5f %10.4f %9d\n", c.id.c_str(), c.median.rmse, c.median.rel,
                        c.median.delta1, c.diverged);
        for (const CheckResult& c : r.checks) {
            std::printf("  [%s] %s", c.passed ? "PASS" : "FAIL", c.description.c_str());
            for (double f : c.pairFractions)
                std::printf(" %.2f", f);
            if (c.relativeImprovement != 0.0)
                std::printf(" (%.1f%%)", 100.0 * c.relativeImprovement);
            std::printf("\n");
        }
    }
    ensure_parent(a.out);
    write_document(a.out, ablation_to_json(results, options));
    std::printf("\nwrote %s\n", a.out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse-to-dense depth completion with gradient-selection losses"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "depthprop 1.0");

    Overrides genFlags;
    std::string genOut = ".";
    auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic scene: gt depth, mask, image and samples");
    gen->add_option("--config", genFlags.configFile, "Key-value config file")->check(CLI::ExistingFile);
    gen->add_option("--out", genOut, "Output directory");
    bind_size(*gen, genFlags);
    genFlags.bind(*gen, "--layout", "scene.layout", "vertical_strips, grid_tiles or random_rectangles");
    genFlags.bind(*gen, "--regions", "scene.regions", "Number of planar regions");
    genFlags.bind(*gen, "--depth-min", "scene.depth_min", "Minimum depth in meters");
    genFlags.bind(*gen, "--depth-max", "scene.depth_max", "Maximum depth in meters");
    genFlags.bind(*gen, "--texture", "scene.texture", "flat, per_region_shade or noise_texture");
    genFlags.bind(*gen, "--noise", "scene.noise_std", "Sample noise standard deviation in meters");
    genFlags.bind(*gen, "--seed", "scene.seed", "Seed for planes, layout and sampling");
    genFlags.bind(*gen, "--samples", "sampling.count", "Sample count (beam count for scanlines)");
    genFlags.bind(*gen, "--protocol", "sampling.protocol", "uniform_random or scanlines");

    Overrides completeFlags;
    CompleteArgs completeArgs;
    auto* complete = app.add_subcommand("complete", "Complete a sparse depth map");
    complete->add_option("--config", completeFlags.configFile, "Key-value config file")->check(CLI::ExistingFile);
    complete->add_option("--sparse", completeArgs.sparse, "Samples: .csv or a depth map with 0 as missing")
        ->required();
    complete->add_option("--mask", completeArgs.mask, "Segmentation mask (16-bit or 8-bit PGM)")->required();
    complete->add_option("--image", completeArgs.image, "Luminance float map, needed for image guidance");
    complete->add_option("--gt", completeArgs.gt, "Ground truth depth; enables metrics");
    complete->add_option("--out", completeArgs.out, "Completed depth float map");
    complete->add_option("--trace", completeArgs.trace, "Write the solver trace report here");
    complete->add_option("--metrics", completeArgs.metrics, "Write the metrics report here (needs --gt)");
    bind_solver_flags(*complete, completeFlags);

    std::string evalPred, evalGt, evalOut;
    double evalCap = kIndoorCapMeters;
    auto* eval = app.add_subcommand("eval", "Score a prediction against ground truth");
    eval->add_option("--pred", evalPred, "Predicted depth map")->required();
    eval->add_option("--gt", evalGt, "Ground truth depth map; 0 marks missing pixels")->required();
    eval->add_option("--cap", evalCap, "Evaluate pixels with 0 < gt <= cap meters");
    eval->add_option("--out", evalOut, "Write the metrics report here");

    AblateArgs ablateArgs;
    auto* ablate = app.add_subcommand("ablate", "Run the ablation studies on the synthetic suite");
    ablate->add_option("--study", ablateArgs.studies, "terms, windows, smoothness, guidance or all");
    ablate->add_option("--seeds", ablateArgs.seeds, "Sampling seeds per scene");
    ablate->add_option("--scenes", ablateArgs.scenes, "Scenes per suite");
    ablate->add_option("--size", ablateArgs.size, "Scene side in pixels");
    ablate->add_option("--iterations", ablateArgs.iterations, "Override the iteration cap");
    ablate->add_option("--lr", ablateArgs.lr, "Override the step size");
    ablate->add_option("--out", ablateArgs.out, "Table report path");
    ablate->add_flag("--quiet", ablateArgs.quiet, "No progress lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*gen)
            return run_gen_scene(genFlags, genOut);
        if (*complete)
            return run_complete(completeFlags, completeArgs);
        if (*eval)
            return run_eval(evalPred, evalGt, evalCap, evalOut);
        if (*ablate)
            return run_ablate(ablateArgs);
    } catch (const io::FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
