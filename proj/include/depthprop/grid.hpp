#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

namespace depthprop {

/// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major H x W grid. Pixel (row, col) has linear index row * W + col.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using DepthField = Grid<double>;
using Luminance = Grid<double>;
using LabelGrid = Grid<std::int32_t>;

using PixelIndex = Eigen::Index;
using PixelSet = std::vector<PixelIndex>;

/// Throws unless the field is at least 2x2 with finite, non-negative values.
template <typename Derived>
void check_depth_field(const Eigen::DenseBase<Derived>& field)
{
    if (field.rows() < 2 || field.cols() < 2)
        throw InvalidInput("depth field must be at least 2x2, got " + std::to_string(field.rows())
                           + "x" + std::to_string(field.cols()));
    if (!field.derived().array().isFinite().all())
        throw InvalidInput("depth field contains non-finite values");
    if ((field.derived().array() < 0).any())
        throw InvalidInput("depth field contains negative values");
}

template <typename Scalar>
struct GradientField {
    Grid<Scalar> dx;
    Grid<Scalar> dy;
    Grid<Scalar> magnitude;  // |dx| + |dy|
};

/// Forward differences into `g`, reusing its storage. Zero last column (dx) and last row (dy).
template <typename Derived>
void forward_gradients_into(const Eigen::ArrayBase<Derived>& field, GradientField<typename Derived::Scalar>& g)
{
    const Eigen::Index h = field.rows();
    const Eigen::Index w = field.cols();
    if (h < 2 || w < 2)
        throw InvalidInput("forward_gradients needs at least 2x2, got " + std::to_string(h) + "x"
                           + std::to_string(w));
    g.dx.resize(h, w);
    g.dy.resize(h, w);
    g.dx.leftCols(w - 1) = field.rightCols(w - 1) - field.leftCols(w - 1);
    g.dx.col(w - 1).setZero();
    g.dy.topRows(h - 1) = field.bottomRows(h - 1) - field.topRows(h - 1);
    g.dy.row(h - 1).setZero();
    g.magnitude = g.dx.abs() + g.dy.abs();
}

template <typename Derived>
GradientField<typename Derived::Scalar> forward_gradients(const Eigen::ArrayBase<Derived>& field)
{
    GradientField<typename Derived::Scalar> g;
    forward_gradients_into(field, g);
    return g;
}

struct WindowPartition {
    Eigen::Index windowSize = 0;
    Eigen::Index windowRows = 0;  // windows along the vertical axis
    Eigen::Index windowCols = 0;
    std::vector<PixelSet> windows;  // row-major over windows, pixels ascending
};

/// Non-overlapping square tiling from the top-left corner; edge windows keep the remainder.
WindowPartition partition_windows(Eigen::Index height, Eigen::Index width, Eigen::Index windowSize);

/// Strict ranking used by every top-k rule: larger key first, then smaller pixel index.
template <typename Scalar>
inline bool ranks_before(Scalar keyA, PixelIndex a, Scalar keyB, PixelIndex b)
{
    return keyA > keyB || (keyA == keyB && a < b);
}

namespace detail {

/// Order-preserving integer image of a floating key: the bit pattern with the sign folded so that
/// unsigned comparison matches numeric order. Both zeros map to the same image.
inline std::uint64_t ordered_bits(double x)
{
    const auto bits = std::bit_cast<std::uint64_t>(x + 0.0);  // -0 + 0 is +0
    const std::uint64_t negative = -(bits >> 63);  // all ones for negative keys
    return bits ^ (negative | (std::uint64_t{1} << 63));
}

inline double from_ordered_bits(std::uint64_t key)
{
    const std::uint64_t negative = (key >> 63) - 1;  // all ones when the top bit is clear
    return std::bit_cast<double>(key ^ (negative | (std::uint64_t{1} << 63)));
}

/// k-th largest (1-based) of `keys[0, live)` and how many keys are strictly larger, given the
/// smallest and largest key. Reorders `keys`. Radix passes on the highest differing bits shrink
/// the set without data-dependent branches; nth_element finishes once it is small.
inline std::pair<std::uint64_t, std::size_t> kth_largest_key(std::vector<std::uint64_t>& keys, std::size_t live,
                                                             std::size_t k, std::uint64_t lo, std::uint64_t hi)
{
    constexpr int kMaxDigitBits = 11;
    constexpr std::size_t kSmall = 48;
    std::size_t above = 0;
    std::array<std::uint32_t, std::size_t{1} << kMaxDigitBits> hist;
    while (live > kSmall) {
        if (lo == hi)
            return {lo, above};
        // About four keys per bucket keeps the histogram cheap to clear for small sets.
        const int digitBits = std::clamp(static_cast<int>(std::bit_width(live)) - 2, 4, kMaxDigitBits);
        const std::size_t buckets = std::size_t{1} << digitBits;
        // Keys share every bit above the highest differing one.
        const int top = 63 - std::countl_zero(lo ^ hi);
        const int shift = std::max(0, top + 1 - digitBits);
        std::fill_n(hist.begin(), buckets, 0u);
        for (std::size_t i = 0; i < live; ++i)
            ++hist[(keys[i] >> shift) & (buckets - 1)];
        std::size_t bucket = buckets;
        while (above + hist[--bucket] < k)
            above += hist[bucket];
        std::size_t kept = 0;
        lo = ~std::uint64_t{0};
        hi = 0;
        for (std::size_t i = 0; i < live; ++i) {
            const std::uint64_t key = keys[i];
            const bool keep = ((key >> shift) & (buckets - 1)) == bucket;
            keys[kept] = key;
            kept += keep;
            lo = std::min(lo, keep ? key : lo);
            hi = std::max(hi, keep ? key : hi);
        }
        live = kept;
    }
    const auto first = keys.begin();
    const auto nth = first + static_cast<std::ptrdiff_t>(k - above) - 1;
    std::nth_element(first, nth, first + static_cast<std::ptrdiff_t>(live), std::greater<>());
    const std::uint64_t threshold = *nth;
    above += static_cast<std::size_t>(std::count_if(first, nth, [&](std::uint64_t x) { return x > threshold; }));
    return {threshold, above};
}

/// Value of the k-th largest of `values` (1-based), and how many values are strictly larger.
/// `work` receives a partially ordered copy.
template <typename Scalar>
std::pair<Scalar, std::size_t> kth_largest(std::span<const Scalar> values, std::size_t k, std::vector<Scalar>& work)
{
    work.assign(values.begin(), values.end());
    const auto nth = work.begin() + static_cast<std::ptrdiff_t>(k) - 1;
    std::nth_element(work.begin(), nth, work.end(), std::greater<>());
    const Scalar threshold = *nth;
    // Everything before nth is >= threshold; count the strict part.
    const auto above = std::count_if(work.begin(), nth, [&](Scalar x) { return x > threshold; });
    return {threshold, static_cast<std::size_t>(above)};
}

}  // namespace detail

/// Reusable working memory for select_top_k.
template <typename Scalar>
struct SelectScratch {
    std::vector<Scalar> values;
    std::vector<std::uint64_t> keys;
    std::vector<Scalar> work;
    PixelSet compacted;
    PixelSet atThreshold;
};

/// The k best candidates by `key` written to `out` in ascending pixel order.
template <typename Scalar>
void select_top_k(std::span<const PixelIndex> candidates, const Grid<Scalar>& key, std::size_t k, PixelSet& out,
                  SelectScratch<Scalar>& scratch)
{
    out.clear();
    k = std::min(k, candidates.size());
    if (k == 0)
        return;
    const Scalar* data = key.data();
    if (k == 1) {
        PixelIndex best = candidates.front();
        Scalar bestKey = data[best];
        // Selects instead of branches: the running best changes at unpredictable points.
        for (PixelIndex p : candidates.subspan(1)) {
            const Scalar v = data[p];
            const bool better = (v > bestKey) | ((v == bestKey) & (p < best));
            best ^= (best ^ p) & -static_cast<PixelIndex>(better);
            bestKey = std::max(bestKey, v);
        }
        out.push_back(best);
        return;
    }
    // One gather keeps the later passes on contiguous memory.
    const std::size_t n = candidates.size();
    std::vector<Scalar>& values = scratch.values;
    values.resize(n);
    Scalar threshold{};
    std::size_t above = 0;
    if constexpr (std::is_same_v<Scalar, double>) {
        std::vector<std::uint64_t>& keys = scratch.keys;
        keys.resize(n);
        std::uint64_t lo = ~std::uint64_t{0};
        std::uint64_t hi = 0;
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = data[candidates[i]];
            keys[i] = detail::ordered_bits(values[i]);
            lo = std::min(lo, keys[i]);
            hi = std::max(hi, keys[i]);
        }
        const auto [key, count] = detail::kth_largest_key(keys, n, k, lo, hi);
        threshold = detail::from_ordered_bits(key);
        above = count;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            values[i] = data[candidates[i]];
        std::tie(threshold, above) = detail::kth_largest(std::span<const Scalar>(values), k, scratch.work);
    }

    // Keys above the k-th largest always win; ties at it go to the lowest pixel indices.
    std::size_t ties = k - above;

    if (std::is_sorted(candidates.begin(), candidates.end())) {
        // Branch-free compaction: about half the tests go each way, so branches would mispredict.
        PixelSet& buffer = scratch.compacted;
        if (buffer.size() < n)
            buffer.resize(n);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool tie = values[i] == threshold && ties > 0;
            ties -= tie;
            buffer[kept] = candidates[i];
            kept += (values[i] > threshold) | tie;
        }
        out.assign(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(kept));
        return;
    }
    out.reserve(k);
    PixelSet& atThreshold = scratch.atThreshold;
    atThreshold.clear();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (values[i] > threshold)
            out.push_back(candidates[i]);
        else if (values[i] == threshold)
            atThreshold.push_back(candidates[i]);
    }
    std::sort(atThreshold.begin(), atThreshold.end());
    out.insert(out.end(), atThreshold.begin(), atThreshold.begin() + static_cast<std::ptrdiff_t>(ties));
    std::sort(out.begin(), out.end());
}

template <typename Scalar>
PixelSet select_top_k(std::span<const PixelIndex> candidates, const Grid<Scalar>& key, std::size_t k)
{
    PixelSet out;
    SelectScratch<Scalar> scratch;
    select_top_k(candidates, key, k, out, scratch);
    return out;
}

/// Dense label map; region s is the set of pixels carrying label s.
class SegmentationMask {
  public:
    SegmentationMask() = default;
    explicit SegmentationMask(LabelGrid labels);

    static SegmentationMask uniform(Eigen::Index height, Eigen::Index width, std::int32_t label = 0);

    Eigen::Index height() const { return labels_.rows(); }
    Eigen::Index width() const { return labels_.cols(); }
    const LabelGrid& labels() const { return labels_; }
    std::int32_t operator()(Eigen::Index row, Eigen::Index col) const { return labels_(row, col); }
    std::int32_t max_label() const { return labels_.maxCoeff(); }

    bool operator==(const SegmentationMask& other) const
    {
        return labels_.rows() == other.labels_.rows() && labels_.cols() == other.labels_.cols()
            && (labels_ == other.labels_).all();
    }

  private:
    LabelGrid labels_;
};

/// Pixel sets per region, ordered by (label, first pixel). Empty regions are dropped.
/// With splitConnected, equal-label pixels are further split into 4-connected components.
std::vector<PixelSet> region_index(const SegmentationMask& mask, bool splitConnected = false);

/// Region id per pixel matching the order of region_index().
Grid<std::int32_t> region_id_grid(const SegmentationMask& mask, bool splitConnected = false);

struct SparseSample {
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    double depth = 0.0;

    bool operator==(const SparseSample&) const = default;
};

/// Depth measurements at a subset V of pixels. Samples are kept in row-major order.
class SparseDepth {
  public:
    SparseDepth() = default;
    SparseDepth(Eigen::Index height, Eigen::Index width, std::vector<SparseSample> samples);

    Eigen::Index height() const { return height_; }
    Eigen::Index width() const { return width_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const std::vector<SparseSample>& samples() const { return samples_; }
    PixelIndex pixel(const SparseSample& s) const { return s.row * width_ + s.col; }
    double mean_depth() const;

    bool operator==(const SparseDepth& other) const = default;

  private:
    Eigen::Index height_ = 0;
    Eigen::Index width_ = 0;
    std::vector<SparseSample> samples_;
};

}  // namespace depthprop
