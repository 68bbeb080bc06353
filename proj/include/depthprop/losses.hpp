#pragma once

#include "depthprop/grid.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace depthprop {

enum class ConstraintBasis { mask, image };

struct GcConfig {
    /// A window size of kFullWindow makes one window that covers the whole field.
    static constexpr Eigen::Index kFullWindow = 0;

    Eigen::Index windowSize = 8;
    double selectFraction = 0.02;
    ConstraintBasis basis = ConstraintBasis::mask;
    // Only meaningful for the mask basis: pixels whose forward neighbour carries another
    // label never enter the candidate set.
    bool edgeExclusion = true;

    void validate() const;
    /// Selected count for a window with `pixelCount` pixels: max(1, round(fraction * count)).
    std::size_t select_count(std::size_t pixelCount) const;
    Eigen::Index window_for(Eigen::Index height, Eigen::Index width) const
    {
        return windowSize == kFullWindow ? std::max(height, width) : windowSize;
    }
};

enum class SmoothnessVariant {
    selective_mask,      // top fraction of intra-region magnitudes per region
    mask_all_gradients,  // every intra-region magnitude
    mask_smooth,         // edge-aware weighting driven by mask label changes
    image_smooth,        // edge-aware weighting driven by luminance gradients
};

struct SmsConfig {
    double selectFraction = 0.40;
    SmoothnessVariant variant = SmoothnessVariant::selective_mask;
    bool splitConnected = false;

    void validate() const;
    /// max(1, ceil(fraction * count)) for a non-empty candidate set.
    std::size_t select_count(std::size_t candidateCount) const;
};

/// A loss value together with its (sub)gradient with respect to the depth field.
struct TermValue {
    double value = 0.0;
    DepthField grad;
};

struct GcResult : TermValue {
    /// One entry per window of the partition; empty for windows without candidates.
    std::vector<PixelSet> selected;
    std::size_t activeWindows = 0;
};

struct SmsResult : TermValue {
    /// One entry per region of region_index(); empty for regions without candidates.
    std::vector<PixelSet> selected;
    bool degenerate = false;  // no region had a candidate pixel
};

/// Reusable buffers for repeated loss evaluation on same-shaped fields.
struct LossWorkspace {
    GradientField<double> gradients;
    Grid<double> key;
    SelectScratch<double> scratch;
};

/// Mask- or image-dependent part of the windowed constraint, built once per guidance input.
class GcPlan {
  public:
    GcPlan(const SegmentationMask& mask, const GcConfig& cfg);
    GcPlan(const Luminance& image, const GcConfig& cfg);

    Eigen::Index height() const { return height_; }
    Eigen::Index width() const { return width_; }
    GcResult evaluate(const DepthField& field) const;
    /// Adds the subgradient to `grad`, overwrites `selected` and returns the value.
    double accumulate(const GradientField<double>& g, DepthField& grad, std::vector<PixelSet>& selected,
                      LossWorkspace& ws) const;
    std::size_t active_windows() const { return activeWindows_; }

  private:
    Eigen::Index height_ = 0;
    Eigen::Index width_ = 0;
    std::vector<PixelSet> candidates_;  // per window
    std::vector<std::size_t> counts_;   // selection size per window
    std::size_t activeWindows_ = 0;
    std::optional<Grid<double>> weight_;
};

/// Region candidate sets for the selective smoothness term, built once per mask.
class SmsPlan {
  public:
    SmsPlan(const SegmentationMask& mask, const SmsConfig& cfg, const Luminance* image = nullptr);

    SmsResult evaluate(const DepthField& field) const;
    /// Adds the subgradient to `grad`, overwrites `selected` and returns the value.
    double accumulate(const GradientField<double>& g, DepthField& grad, std::vector<PixelSet>& selected,
                      LossWorkspace& ws) const;
    bool degenerate() const { return !weight_ && activeRegions_ == 0; }

  private:
    SmsConfig cfg_;
    Eigen::Index height_ = 0;
    Eigen::Index width_ = 0;
    std::vector<PixelSet> candidates_;  // per region
    std::vector<std::size_t> counts_;
    std::size_t activeRegions_ = 0;
    std::optional<Grid<double>> weight_;  // edge-aware variants
};

/// Per-pixel class probabilities, stored as (H*W) x C with pixels in row-major order.
struct SegPrediction {
    Eigen::Index height = 0;
    Eigen::Index width = 0;
    Grid<double> probs;

    Eigen::Index classes() const { return probs.cols(); }
    void validate() const;
};

TermValue depth_consistency(const DepthField& field, const SparseDepth& sparse);

GcResult local_gradient_constraint(const DepthField& field, const SegmentationMask& mask, const GcConfig& cfg);
GcResult local_gradient_constraint(const DepthField& field, const Luminance& image, const GcConfig& cfg);

/// Weight-driven smoothness: mean over pixels of (|dx| + |dy|) * exp(-(|Ix| + |Iy|)).
TermValue edge_aware_smoothness(const DepthField& field, const Luminance& image);

/// Luminance surrogate whose gradient saturates exactly where mask labels change.
Luminance mask_guidance_image(const SegmentationMask& mask, double contrast = 50.0);

/// Per-pixel edge-aware weights exp(-(|Ix| + |Iy|)).
Grid<double> edge_weights(const Luminance& image);

/// `image` is required only for the image_smooth variant.
SmsResult selective_mask_smoothness(const DepthField& field, const SegmentationMask& mask, const SmsConfig& cfg,
                                    const Luminance* image = nullptr);

/// Mean cross entropy against one-hot pseudo labels. Constant in the depth field.
double segmentation_cross_entropy(const SegPrediction& pred, const SegmentationMask& pseudoLabels);

enum class Term : unsigned { dc = 1u, gc = 2u, sms = 4u, smooth = 8u, seg = 16u };

class TermSet {
  public:
    constexpr TermSet() = default;
    constexpr TermSet(std::initializer_list<Term> terms)
    {
        for (Term t : terms)
            bits_ |= static_cast<unsigned>(t);
    }

    constexpr bool contains(Term t) const { return (bits_ & static_cast<unsigned>(t)) != 0; }
    constexpr TermSet& insert(Term t)
    {
        bits_ |= static_cast<unsigned>(t);
        return *this;
    }
    constexpr TermSet& erase(Term t)
    {
        bits_ &= ~static_cast<unsigned>(t);
        return *this;
    }
    constexpr bool operator==(const TermSet&) const = default;

    /// Comma separated names, e.g. "dc,gc,sms".
    static TermSet parse(std::string_view text);
    std::string to_string() const;

  private:
    unsigned bits_ = 0;
};

struct LossConfig {
    GcConfig gc;
    SmsConfig sms;
    double alpha = 0.1;
    TermSet terms{Term::dc, Term::gc, Term::sms};

    void validate() const;
};

struct LossReport {
    double dc = 0.0;
    double gc = 0.0;
    double sms = 0.0;
    double smooth = 0.0;
    double seg = 0.0;
    double total = 0.0;
    DepthField gradient;
    std::vector<PixelSet> selected_gc;
    std::vector<PixelSet> selected_sms;
    bool smsDegenerate = false;
};

/// The full objective with its guidance-dependent plans prepared once; evaluate() is called
/// every solver iteration.
class Objective {
  public:
    Objective(const SparseDepth& sparse, const SegmentationMask& mask, const Luminance* image, const LossConfig& cfg,
              const SegPrediction* seg = nullptr);

    LossReport evaluate(const DepthField& field) const;
    /// Allocation-free once `report` and `ws` have been used with a field of this shape.
    void evaluate(const DepthField& field, LossReport& report, LossWorkspace& ws) const;

  private:
    const SparseDepth* sparse_;
    LossConfig cfg_;
    std::optional<GcPlan> gc_;
    std::optional<SmsPlan> sms_;
    std::optional<Grid<double>> smoothWeight_;
    double seg_ = 0.0;
    Eigen::Index height_ = 0;
    Eigen::Index width_ = 0;
};

/// total = dc + alpha * seg + gc + sms + smooth over the enabled terms. The seg term adds to the
/// value only; the depth gradient ignores it. `image` is needed for the image basis and the
/// smooth term, `seg` for the seg term. Without `seg` the seg term contributes 0.
LossReport total_objective(const DepthField& field, const SparseDepth& sparse, const SegmentationMask& mask,
                           const Luminance* image, const LossConfig& cfg, const SegPrediction* seg = nullptr);

std::string_view to_string(ConstraintBasis basis);
std::string_view to_string(SmoothnessVariant variant);
ConstraintBasis parse_constraint_basis(std::string_view text);
SmoothnessVariant parse_smoothness_variant(std::string_view text);

}  // namespace depthprop
