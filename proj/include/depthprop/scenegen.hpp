#pragma once

#include "depthprop/grid.hpp"

#include <cstdint>
#include <string_view>

namespace depthprop {

enum class Layout { vertical_strips, grid_tiles, random_rectangles };
enum class TextureMode { flat, per_region_shade, noise_texture };

/// depth = a * col + b * row + c, in meters with pixel coordinates.
struct Plane {
    double a = 0.0;
    double b = 0.0;
    double c = 1.0;
};

struct SceneSpec {
    Eigen::Index height = 64;
    Eigen::Index width = 64;
    int regionCount = 1;
    std::vector<Plane> planes;  // one per region
    Layout layout = Layout::vertical_strips;
    double depthMin = 0.5;
    double depthMax = 10.0;
    TextureMode texture = TextureMode::per_region_shade;
    double noiseStd = 0.0;  // applied to samples by sample_sparse
    std::uint64_t seed = 0;

    void validate() const;
};

struct Scene {
    DepthField depth;
    SegmentationMask mask;
    Luminance image;
    bool clipped = false;  // some plane left [depthMin, depthMax]
};

/// Region labels 0..regionCount-1 for the layout. Only random_rectangles uses the seed.
LabelGrid generate_layout(const SceneSpec& spec);

Scene generate_scene(const SceneSpec& spec);

/// Random planes whose depth stays inside [depthMin, depthMax] over an H x W grid.
std::vector<Plane> random_planes(int count, Eigen::Index height, Eigen::Index width, double depthMin,
                                 double depthMax, std::uint64_t seed);

enum class SamplingProtocol { uniform_random, scanlines };

struct SamplingSpec {
    SamplingProtocol protocol = SamplingProtocol::uniform_random;
    Eigen::Index count = 500;  // sample count, or beam count for scanlines
};

/// Sample the ground truth. Noise is additive Gaussian followed by a positive floor.
SparseDepth sample_sparse(const DepthField& gt, const SamplingSpec& spec, double noiseStd, std::uint64_t seed);

std::string_view to_string(Layout layout);
std::string_view to_string(TextureMode mode);
std::string_view to_string(SamplingProtocol protocol);
Layout parse_layout(std::string_view text);
TextureMode parse_texture_mode(std::string_view text);
SamplingProtocol parse_sampling_protocol(std::string_view text);

}  // namespace depthprop
