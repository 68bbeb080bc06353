#include "depthprop/scenegen.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace depthprop {

namespace {

// Fixed stream for the luminance texture so it never depends on the sampling seed.
constexpr std::uint64_t kTextureSeed = 0x5eed7e47u;

double region_shade(std::int32_t label)
{
    const double golden = 0.6180339887498949;
    const double frac = std::fmod(0.1 + golden * label, 1.0);
    return 0.15 + 0.7 * frac;
}

}  // namespace

void SceneSpec::validate() const
{
    if (height < 2 || width < 2)
        throw InvalidInput("scene must be at least 2x2");
    if (regionCount < 1)
        throw InvalidInput("scene needs at least one region");
    if (static_cast<int>(planes.size()) != regionCount)
        throw InvalidInput("scene has " + std::to_string(planes.size()) + " planes for "
                           + std::to_string(regionCount) + " regions");
    if (!(depthMin > 0.0 && depthMin < depthMax))
        throw InvalidInput("depth range must satisfy 0 < min < max");
    if (layout == Layout::vertical_strips && regionCount > width)
        throw InvalidInput("more vertical strips than columns");
    if (!(noiseStd >= 0.0))
        throw InvalidInput("noise standard deviation must be non-negative");
}

LabelGrid generate_layout(const SceneSpec& spec)
{
    const Eigen::Index h = spec.height;
    const Eigen::Index w = spec.width;
    const int regions = spec.regionCount;
    LabelGrid labels(h, w);

    switch (spec.layout) {
    case Layout::vertical_strips:
        for (Eigen::Index c = 0; c < w; ++c)
            labels.col(c).setConstant(static_cast<std::int32_t>(c * regions / w));
        break;
    case Layout::grid_tiles: {
        const auto cols = static_cast<Eigen::Index>(std::ceil(std::sqrt(static_cast<double>(regions))));
        const Eigen::Index rows = (regions + cols - 1) / cols;
        for (Eigen::Index r = 0; r < h; ++r) {
            for (Eigen::Index c = 0; c < w; ++c) {
                const Eigen::Index tile = (r * rows / h) * cols + (c * cols / w);
                labels(r, c) = static_cast<std::int32_t>(std::min<Eigen::Index>(tile, regions - 1));
            }
        }
        break;
    }
    case Layout::random_rectangles: {
        labels.setZero();
        std::mt19937_64 rng(spec.seed);
        const Eigen::Index minH = std::max<Eigen::Index>(2, h / 6);
        const Eigen::Index minW = std::max<Eigen::Index>(2, w / 6);
        const Eigen::Index maxH = std::max(minH, h / 2);
        const Eigen::Index maxW = std::max(minW, w / 2);
        for (int k = 1; k < regions; ++k) {
            const auto rh = std::uniform_int_distribution<Eigen::Index>(minH, std::min(maxH, h))(rng);
            const auto rw = std::uniform_int_distribution<Eigen::Index>(minW, std::min(maxW, w))(rng);
            const auto r0 = std::uniform_int_distribution<Eigen::Index>(0, h - rh)(rng);
            const auto c0 = std::uniform_int_distribution<Eigen::Index>(0, w - rw)(rng);
            labels.block(r0, c0, rh, rw).setConstant(k);
        }
        break;
    }
    }
    return labels;
}

Scene generate_scene(const SceneSpec& spec)
{
    spec.validate();
    Scene scene;
    LabelGrid labels = generate_layout(spec);

    scene.depth.resize(spec.height, spec.width);
    for (Eigen::Index r = 0; r < spec.height; ++r) {
        for (Eigen::Index c = 0; c < spec.width; ++c) {
            const Plane& pl = spec.planes[static_cast<std::size_t>(labels(r, c))];
            double d = pl.a * static_cast<double>(c) + pl.b * static_cast<double>(r) + pl.c;
            if (d < spec.depthMin || d > spec.depthMax) {
                scene.clipped = true;
                d = std::clamp(d, spec.depthMin, spec.depthMax);
            }
            scene.depth(r, c) = d;
        }
    }

    scene.image.resize(spec.height, spec.width);
    switch (spec.texture) {
    case TextureMode::flat:
        scene.image.setConstant(0.5);
        break;
    case TextureMode::per_region_shade:
        scene.image = labels.unaryExpr([](std::int32_t l) { return region_shade(l); });
        break;
    case TextureMode::noise_texture: {
        std::mt19937_64 rng(kTextureSeed);
        std::uniform_real_distribution<double> jitter(-0.35, 0.35);
        for (Eigen::Index i = 0; i < scene.image.size(); ++i)
            scene.image.data()[i] = std::clamp(region_shade(labels.data()[i]) + jitter(rng), 0.0, 1.0);
        break;
    }
    }

    scene.mask = SegmentationMask(std::move(labels));
    return scene;
}

std::vector<Plane> random_planes(int count, Eigen::Index height, Eigen::Index width, double depthMin,
                                 double depthMax, std::uint64_t seed)
{
    if (count < 1 || !(depthMin > 0.0 && depthMin < depthMax))
        throw InvalidInput("random_planes needs count >= 1 and 0 < min < max");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double span = depthMax - depthMin;
    const double halfW = 0.5 * static_cast<double>(width - 1);
    const double halfH = 0.5 * static_cast<double>(height - 1);

    std::vector<Plane> planes;
    planes.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double center = depthMin + span * (0.15 + 0.7 * unit(rng));
        // Depth excursion from the centre stays within 80% of the distance to the nearest bound.
        const double budget = 0.8 * std::min(center - depthMin, depthMax - center) * unit(rng);
        const double split = unit(rng);
        const double a = (unit(rng) < 0.5 ? -1.0 : 1.0) * budget * split / std::max(halfW, 1.0);
        const double b = (unit(rng) < 0.5 ? -1.0 : 1.0) * budget * (1.0 - split) / std::max(halfH, 1.0);
        planes.push_back({a, b, center - a * halfW - b * halfH});
    }
    return planes;
}

SparseDepth sample_sparse(const DepthField& gt, const SamplingSpec& spec, double noiseStd, std::uint64_t seed)
{
    const Eigen::Index h = gt.rows();
    const Eigen::Index w = gt.cols();
    if (!(noiseStd >= 0.0))
        throw InvalidInput("noise standard deviation must be non-negative");

    std::vector<PixelIndex> picks;
    std::mt19937_64 rng(seed);
    if (spec.protocol == SamplingProtocol::uniform_random) {
        if (spec.count < 1 || spec.count > h * w)
            throw InvalidInput("cannot draw " + std::to_string(spec.count) + " distinct samples from "
                               + std::to_string(h * w) + " pixels");
        std::vector<PixelIndex> pool(static_cast<std::size_t>(h * w));
        std::iota(pool.begin(), pool.end(), PixelIndex{0});
        const auto n = static_cast<std::size_t>(spec.count);
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        picks.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
        if (spec.count < 1 || spec.count > h)
            throw InvalidInput("beam count must lie in [1, height]");
        const Eigen::Index step = h / spec.count;
        for (Eigen::Index beam = 0; beam < spec.count; ++beam)
            for (Eigen::Index c = 0; c < w; ++c)
                picks.push_back(beam * step * w + c);
    }

    std::normal_distribution<double> noise(0.0, noiseStd > 0.0 ? noiseStd : 1.0);
    std::vector<SparseSample> samples;
    samples.reserve(picks.size());
    for (PixelIndex p : picks) {
        double d = gt.data()[p];
        if (noiseStd > 0.0)
            d = std::max(d + noise(rng), 1e-3);
        samples.push_back({p / w, p % w, d});
    }
    return SparseDepth(h, w, std::move(samples));
}

std::string_view to_string(Layout layout)
{
    switch (layout) {
    case Layout::vertical_strips:
        return "vertical_strips";
    case Layout::grid_tiles:
        return "grid_tiles";
    case Layout::random_rectangles:
        return "random_rectangles";
    }
    return "vertical_strips";
}

std::string_view to_string(TextureMode mode)
{
    switch (mode) {
    case TextureMode::flat:
        return "flat";
    case TextureMode::per_region_shade:
        return "per_region_shade";
    case TextureMode::noise_texture:
        return "noise_texture";
    }
    return "flat";
}

std::string_view to_string(SamplingProtocol protocol)
{
    return protocol == SamplingProtocol::uniform_random ? "uniform_random" : "scanlines";
}

Layout parse_layout(std::string_view text)
{
    for (auto v : {Layout::vertical_strips, Layout::grid_tiles, Layout::random_rectangles})
        if (to_string(v) == text)
            return v;
    throw InvalidInput("unknown layout '" + std::string(text) + "'");
}

TextureMode parse_texture_mode(std::string_view text)
{
    for (auto v : {TextureMode::flat, TextureMode::per_region_shade, TextureMode::noise_texture})
        if (to_string(v) == text)
            return v;
    throw InvalidInput("unknown texture mode '" + std::string(text) + "'");
}

SamplingProtocol parse_sampling_protocol(std::string_view text)
{
    if (text == "uniform_random")
        return SamplingProtocol::uniform_random;
    if (text == "scanlines")
        return SamplingProtocol::scanlines;
    throw InvalidInput("unknown sampling protocol '" + std::string(text) + "'");
}

}  // namespace depthprop
