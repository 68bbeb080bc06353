#include "depthprop/grid.hpp"

#include <cmath>
#include <map>
#include <numeric>

namespace depthprop {

WindowPartition partition_windows(Eigen::Index height, Eigen::Index width, Eigen::Index windowSize)
{
    if (windowSize < 1)
        throw InvalidInput("window size must be at least 1");
    if (height < 1 || width < 1)
        throw InvalidInput("grid dimensions must be positive");

    WindowPartition part;
    part.windowSize = windowSize;
    part.windowRows = (height + windowSize - 1) / windowSize;
    part.windowCols = (width + windowSize - 1) / windowSize;
    part.windows.reserve(static_cast<std::size_t>(part.windowRows * part.windowCols));
    for (Eigen::Index wr = 0; wr < part.windowRows; ++wr) {
        const Eigen::Index r0 = wr * windowSize;
        const Eigen::Index r1 = std::min(height, r0 + windowSize);
        for (Eigen::Index wc = 0; wc < part.windowCols; ++wc) {
            const Eigen::Index c0 = wc * windowSize;
            const Eigen::Index c1 = std::min(width, c0 + windowSize);
            PixelSet pixels;
            pixels.reserve(static_cast<std::size_t>((r1 - r0) * (c1 - c0)));
            for (Eigen::Index r = r0; r < r1; ++r)
                for (Eigen::Index c = c0; c < c1; ++c)
                    pixels.push_back(r * width + c);
            part.windows.push_back(std::move(pixels));
        }
    }
    return part;
}

SegmentationMask::SegmentationMask(LabelGrid labels) : labels_(std::move(labels))
{
    if (labels_.size() == 0)
        throw InvalidInput("segmentation mask must cover at least one pixel");
    if ((labels_ < 0).any())
        throw InvalidInput("segmentation labels must be non-negative");
}

SegmentationMask SegmentationMask::uniform(Eigen::Index height, Eigen::Index width, std::int32_t label)
{
    return SegmentationMask(LabelGrid::Constant(height, width, label));
}

namespace {

// Union-find over pixels joined to equal-label 4-neighbours.
class DisjointSets {
  public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        // Smaller root wins so the representative is the first pixel of the component.
        if (b < a)
            std::swap(a, b);
        parent_[b] = a;
    }

  private:
    std::vector<std::size_t> parent_;
};

}  // namespace

Grid<std::int32_t> region_id_grid(const SegmentationMask& mask, bool splitConnected)
{
    const Eigen::Index h = mask.height();
    const Eigen::Index w = mask.width();
    const auto& labels = mask.labels();
    Grid<std::int32_t> ids(h, w);

    if (!splitConnected) {
        std::map<std::int32_t, std::int32_t> dense;
        for (Eigen::Index i = 0; i < labels.size(); ++i)
            dense.emplace(labels.data()[i], 0);
        std::int32_t next = 0;
        for (auto& [label, id] : dense)
            id = next++;
        for (Eigen::Index i = 0; i < labels.size(); ++i)
            ids.data()[i] = dense.at(labels.data()[i]);
        return ids;
    }

    DisjointSets sets(static_cast<std::size_t>(h * w));
    for (Eigen::Index r = 0; r < h; ++r) {
        for (Eigen::Index c = 0; c < w; ++c) {
            const auto p = static_cast<std::size_t>(r * w + c);
            if (c + 1 < w && labels(r, c) == labels(r, c + 1))
                sets.unite(p, p + 1);
            if (r + 1 < h && labels(r, c) == labels(r + 1, c))
                sets.unite(p, p + static_cast<std::size_t>(w));
        }
    }
    // Order components by (label, first pixel).
    std::map<std::pair<std::int32_t, std::size_t>, std::int32_t> order;
    for (Eigen::Index i = 0; i < h * w; ++i) {
        const auto root = sets.find(static_cast<std::size_t>(i));
        order.emplace(std::make_pair(labels.data()[root], root), 0);
    }
    std::int32_t next = 0;
    for (auto& [key, id] : order)
        id = next++;
    for (Eigen::Index i = 0; i < h * w; ++i) {
        const auto root = sets.find(static_cast<std::size_t>(i));
        ids.data()[i] = order.at({labels.data()[root], root});
    }
    return ids;
}

std::vector<PixelSet> region_index(const SegmentationMask& mask, bool splitConnected)
{
    const auto ids = region_id_grid(mask, splitConnected);
    std::vector<PixelSet> regions(static_cast<std::size_t>(ids.maxCoeff()) + 1);
    for (Eigen::Index i = 0; i < ids.size(); ++i)
        regions[static_cast<std::size_t>(ids.data()[i])].push_back(i);
    return regions;
}

SparseDepth::SparseDepth(Eigen::Index height, Eigen::Index width, std::vector<SparseSample> samples)
    : height_(height), width_(width), samples_(std::move(samples))
{
    if (height_ < 1 || width_ < 1)
        throw InvalidInput("sparse depth dimensions must be positive");
    for (const auto& s : samples_) {
        if (s.row < 0 || s.row >= height_ || s.col < 0 || s.col >= width_)
            throw InvalidInput("sample (" + std::to_string(s.row) + ", " + std::to_string(s.col)
                               + ") lies outside the grid");
        if (!std::isfinite(s.depth) || s.depth <= 0.0)
            throw InvalidInput("sample depth must be finite and positive at (" + std::to_string(s.row)
                               + ", " + std::to_string(s.col) + ")");
    }
    std::sort(samples_.begin(), samples_.end(), [](const SparseSample& a, const SparseSample& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t i = 1; i < samples_.size(); ++i)
        if (samples_[i].row == samples_[i - 1].row && samples_[i].col == samples_[i - 1].col)
            throw InvalidInput("duplicate sample at (" + std::to_string(samples_[i].row) + ", "
                               + std::to_string(samples_[i].col) + ")");
}

double SparseDepth::mean_depth() const
{
    if (samples_.empty())
        throw InvalidInput("mean of an empty sample set");
    double sum = 0.0;
    for (const auto& s : samples_)
        sum += s.depth;
    return sum / static_cast<double>(samples_.size());
}

}  // namespace depthprop
