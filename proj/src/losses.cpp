#include "depthprop/losses.hpp"

#include <cmath>

namespace depthprop {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void require_shape(const DepthField& field, Eigen::Index h, Eigen::Index w, const char* what)
{
    if (field.rows() != h || field.cols() != w)
        throw InvalidInput(std::string(what) + " is " + std::to_string(h) + "x" + std::to_string(w)
                           + " but the depth field is " + std::to_string(field.rows()) + "x"
                           + std::to_string(field.cols()));
}

// Subgradient of coeff * (|dx(p)| + |dy(p)|) through the forward-difference stencil.
void add_magnitude_subgradient(DepthField& grad, const GradientField<double>& g, PixelIndex p, double coeff)
{
    double* out = grad.data();
    // dx is zero in the last column and dy in the last row, so a zero test is also the bounds test.
    const double dx = g.dx.data()[p];
    const double dy = g.dy.data()[p];
    if (dx != 0.0) {
        const double s = coeff * sign(dx);
        out[p] -= s;
        out[p + 1] += s;
    }
    if (dy != 0.0) {
        const double s = coeff * sign(dy);
        out[p] -= s;
        out[p + grad.cols()] += s;
    }
}

// Mean over pixels of weight * (|dx| + |dy|); adds its fixed-weight subgradient to `grad`.
double accumulate_weighted_smoothness(const GradientField<double>& g, const Grid<double>& weight, DepthField& grad)
{
    const Eigen::Index n = g.magnitude.size();
    const double invP = 1.0 / static_cast<double>(n);
    for (PixelIndex p = 0; p < n; ++p)
        if (weight.data()[p] != 0.0)
            add_magnitude_subgradient(grad, g, p, weight.data()[p] * invP);
    return (weight * g.magnitude).sum() * invP;
}

void require_gradient_shape(const GradientField<double>& g, Eigen::Index h, Eigen::Index w)
{
    if (g.dx.rows() != h || g.dx.cols() != w)
        throw InvalidInput("depth field is " + std::to_string(g.dx.rows()) + "x" + std::to_string(g.dx.cols())
                           + " but the loss was prepared for " + std::to_string(h) + "x" + std::to_string(w));
}

}  // namespace

void GcConfig::validate() const
{
    if (windowSize < 0)
        throw InvalidInput("gc window size must be positive, or kFullWindow");
    if (!(selectFraction > 0.0 && selectFraction <= 1.0))
        throw InvalidInput("gc select fraction must lie in (0, 1]");
}

std::size_t GcConfig::select_count(std::size_t pixelCount) const
{
    const auto n = static_cast<std::size_t>(std::llround(selectFraction * static_cast<double>(pixelCount)));
    return std::max<std::size_t>(1, n);
}

void SmsConfig::validate() const
{
    if (!(selectFraction > 0.0 && selectFraction <= 1.0))
        throw InvalidInput("sms select fraction must lie in (0, 1]");
}

std::size_t SmsConfig::select_count(std::size_t candidateCount) const
{
    // The small slack keeps products like 0.4 * 5 from rounding up past an exact integer.
    const double raw = selectFraction * static_cast<double>(candidateCount);
    const auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9 * raw));
    return std::clamp<std::size_t>(n, 1, candidateCount);
}

void SegPrediction::validate() const
{
    if (probs.rows() != height * width)
        throw InvalidInput("segmentation prediction has " + std::to_string(probs.rows())
                           + " rows, expected H*W = " + std::to_string(height * width));
    if (probs.cols() < 1)
        throw InvalidInput("segmentation prediction needs at least one class");
    if (!probs.isFinite().all() || (probs < 0.0).any() || (probs > 1.0).any())
        throw InvalidInput("segmentation probabilities must lie in [0, 1]");
    const auto sums = probs.rowwise().sum();
    if (((sums - 1.0).abs() > 1e-6).any())
        throw InvalidInput("segmentation probabilities must sum to 1 per pixel");
}

TermValue depth_consistency(const DepthField& field, const SparseDepth& sparse)
{
    require_shape(field, sparse.height(), sparse.width(), "sparse depth");
    if (sparse.empty())
        throw InvalidInput("depth consistency is undefined without samples");

    TermValue out;
    out.grad.setZero(field.rows(), field.cols());
    const double invV = 1.0 / static_cast<double>(sparse.size());
    for (const auto& s : sparse.samples()) {
        const PixelIndex p = sparse.pixel(s);
        const double diff = field.data()[p] - s.depth;
        out.value += std::abs(diff);
        out.grad.data()[p] = sign(diff) * invV;
    }
    out.value *= invV;
    return out;
}

GcPlan::GcPlan(const SegmentationMask& mask, const GcConfig& cfg) : height_(mask.height()), width_(mask.width())
{
    cfg.validate();
    const Eigen::Index h = height_;
    const Eigen::Index w = width_;
    const std::int32_t* labels = mask.labels().data();
    auto part = partition_windows(h, w, cfg.window_for(h, w));
    for (PixelSet& window : part.windows) {
        counts_.push_back(cfg.select_count(window.size()));
        if (cfg.edgeExclusion) {
            std::erase_if(window, [&](PixelIndex p) {
                const Eigen::Index r = p / w;
                const Eigen::Index c = p % w;
                return (c + 1 < w && labels[p + 1] != labels[p]) || (r + 1 < h && labels[p + w] != labels[p]);
            });
        }
        activeWindows_ += !window.empty();
        candidates_.push_back(std::move(window));
    }
}

GcPlan::GcPlan(const Luminance& image, const GcConfig& cfg)
    : height_(image.rows()), width_(image.cols()), weight_(edge_weights(image))
{
    cfg.validate();
    auto part = partition_windows(height_, width_, cfg.window_for(height_, width_));
    for (PixelSet& window : part.windows) {
        counts_.push_back(cfg.select_count(window.size()));
        candidates_.push_back(std::move(window));
    }
    activeWindows_ = candidates_.size();
}

double GcPlan::accumulate(const GradientField<double>& g, DepthField& grad, std::vector<PixelSet>& selected,
                          LossWorkspace& ws) const
{
    require_gradient_shape(g, height_, width_);
    selected.resize(candidates_.size());
    for (PixelSet& sel : selected)
        sel.clear();
    if (activeWindows_ == 0)
        return 0.0;
    if (weight_)
        ws.key = *weight_ * g.magnitude;
    const Grid<double>& key = weight_ ? ws.key : g.magnitude;

    const double invK = 1.0 / static_cast<double>(activeWindows_);
    double value = 0.0;
    for (std::size_t k = 0; k < candidates_.size(); ++k) {
        if (candidates_[k].empty())
            continue;
        PixelSet& sel = selected[k];
        select_top_k<double>(candidates_[k], key, counts_[k], sel, ws.scratch);
        const double invN = 1.0 / static_cast<double>(sel.size());
        double sum = 0.0;
        for (PixelIndex p : sel) {
            sum += key.data()[p];
            const double wp = weight_ ? weight_->data()[p] : 1.0;
            add_magnitude_subgradient(grad, g, p, wp * invN * invK);
        }
        value += sum * invN;
    }
    return value * invK;
}

GcResult GcPlan::evaluate(const DepthField& field) const
{
    LossWorkspace ws;
    forward_gradients_into(field, ws.gradients);
    GcResult out;
    out.grad.setZero(height_, width_);
    out.value = accumulate(ws.gradients, out.grad, out.selected, ws);
    out.activeWindows = activeWindows_;
    return out;
}

GcResult local_gradient_constraint(const DepthField& field, const SegmentationMask& mask, const GcConfig& cfg)
{
    require_shape(field, mask.height(), mask.width(), "segmentation mask");
    return GcPlan(mask, cfg).evaluate(field);
}

GcResult local_gradient_constraint(const DepthField& field, const Luminance& image, const GcConfig& cfg)
{
    require_shape(field, image.rows(), image.cols(), "guidance image");
    return GcPlan(image, cfg).evaluate(field);
}

Grid<double> edge_weights(const Luminance& image)
{
    if (!image.isFinite().all())
        throw InvalidInput("guidance image contains non-finite values");
    return (-forward_gradients(image).magnitude).exp();
}

TermValue edge_aware_smoothness(const DepthField& field, const Luminance& image)
{
    require_shape(field, image.rows(), image.cols(), "guidance image");
    TermValue out;
    out.grad.setZero(field.rows(), field.cols());
    out.value = accumulate_weighted_smoothness(forward_gradients(field), edge_weights(image), out.grad);
    return out;
}

Luminance mask_guidance_image(const SegmentationMask& mask, double contrast)
{
    // Any label change yields a luminance step of at least `contrast`.
    return mask.labels().cast<double>() * contrast;
}

SmsPlan::SmsPlan(const SegmentationMask& mask, const SmsConfig& cfg, const Luminance* image)
    : cfg_(cfg), height_(mask.height()), width_(mask.width())
{
    cfg.validate();
    if (cfg.variant == SmoothnessVariant::mask_smooth) {
        weight_ = edge_weights(mask_guidance_image(mask));
        return;
    }
    if (cfg.variant == SmoothnessVariant::image_smooth) {
        if (!image)
            throw InvalidInput("image_smooth smoothness needs a luminance image");
        if (image->rows() != height_ || image->cols() != width_)
            throw InvalidInput("luminance image and mask differ in shape");
        weight_ = edge_weights(*image);
        return;
    }

    const Eigen::Index h = height_;
    const Eigen::Index w = width_;
    const auto ids = region_id_grid(mask, cfg.splitConnected);
    const std::int32_t* id = ids.data();
    candidates_.resize(static_cast<std::size_t>(ids.maxCoeff()) + 1);
    // Candidates: pixels whose forward x and y neighbours both exist and share their region.
    for (Eigen::Index r = 0; r + 1 < h; ++r) {
        for (Eigen::Index c = 0; c + 1 < w; ++c) {
            const PixelIndex p = r * w + c;
            if (id[p + 1] == id[p] && id[p + w] == id[p])
                candidates_[static_cast<std::size_t>(id[p])].push_back(p);
        }
    }
    for (const PixelSet& cand : candidates_) {
        const bool all = cfg.variant == SmoothnessVariant::mask_all_gradients;
        counts_.push_back(cand.empty() ? 0 : all ? cand.size() : cfg.select_count(cand.size()));
        activeRegions_ += !cand.empty();
    }
}

double SmsPlan::accumulate(const GradientField<double>& g, DepthField& grad, std::vector<PixelSet>& selected,
                           LossWorkspace& ws) const
{
    require_gradient_shape(g, height_, width_);
    if (weight_) {
        selected.clear();
        return accumulate_weighted_smoothness(g, *weight_, grad);
    }
    selected.resize(candidates_.size());
    for (PixelSet& sel : selected)
        sel.clear();
    if (activeRegions_ == 0)
        return 0.0;

    const double invS = 1.0 / static_cast<double>(activeRegions_);
    double value = 0.0;
    for (std::size_t s = 0; s < candidates_.size(); ++s) {
        if (candidates_[s].empty())
            continue;
        PixelSet& sel = selected[s];
        if (counts_[s] == candidates_[s].size())
            sel = candidates_[s];
        else
            select_top_k<double>(candidates_[s], g.magnitude, counts_[s], sel, ws.scratch);
        const double invQ = 1.0 / static_cast<double>(sel.size());
        double sum = 0.0;
        for (PixelIndex p : sel) {
            sum += g.magnitude.data()[p];
            add_magnitude_subgradient(grad, g, p, invQ * invS);
        }
        value += sum * invQ;
    }
    return value * invS;
}

SmsResult SmsPlan::evaluate(const DepthField& field) const
{
    LossWorkspace ws;
    forward_gradients_into(field, ws.gradients);
    SmsResult out;
    out.grad.setZero(height_, width_);
    out.value = accumulate(ws.gradients, out.grad, out.selected, ws);
    out.degenerate = degenerate();
    return out;
}

SmsResult selective_mask_smoothness(const DepthField& field, const SegmentationMask& mask, const SmsConfig& cfg,
                                    const Luminance* image)
{
    require_shape(field, mask.height(), mask.width(), "segmentation mask");
    return SmsPlan(mask, cfg, image).evaluate(field);
}

double segmentation_cross_entropy(const SegPrediction& pred, const SegmentationMask& pseudoLabels)
{
    pred.validate();
    if (pred.height != pseudoLabels.height() || pred.width != pseudoLabels.width())
        throw InvalidInput("segmentation prediction and pseudo labels differ in shape");
    if (pseudoLabels.max_label() >= pred.classes())
        throw InvalidInput("pseudo label " + std::to_string(pseudoLabels.max_label()) + " exceeds class count "
                           + std::to_string(pred.classes()));

    const std::int32_t* labels = pseudoLabels.labels().data();
    const Eigen::Index n = pred.height * pred.width;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double prob = pred.probs(i, labels[i]);
        if (prob <= 0.0)
            throw InvalidInput("zero probability on the labelled class at pixel " + std::to_string(i));
        sum -= std::log(prob);
    }
    return sum / static_cast<double>(n);
}

TermSet TermSet::parse(std::string_view text)
{
    TermSet set;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        std::string_view name = text.substr(start, end - start);
        while (!name.empty() && name.front() == ' ')
            name.remove_prefix(1);
        while (!name.empty() && name.back() == ' ')
            name.remove_suffix(1);
        if (name == "dc")
            set.insert(Term::dc);
        else if (name == "gc")
            set.insert(Term::gc);
        else if (name == "sms")
            set.insert(Term::sms);
        else if (name == "smooth")
            set.insert(Term::smooth);
        else if (name == "seg")
            set.insert(Term::seg);
        else if (!name.empty())
            throw InvalidInput("unknown loss term '" + std::string(name) + "'");
        start = end + 1;
    }
    return set;
}

std::string TermSet::to_string() const
{
    std::string out;
    auto add = [&](Term t, const char* name) {
        if (!contains(t))
            return;
        if (!out.empty())
            out += ',';
        out += name;
    };
    add(Term::dc, "dc");
    add(Term::gc, "gc");
    add(Term::sms, "sms");
    add(Term::smooth, "smooth");
    add(Term::seg, "seg");
    return out;
}

void LossConfig::validate() const
{
    gc.validate();
    sms.validate();
    if (!std::isfinite(alpha) || alpha < 0.0)
        throw InvalidInput("alpha must be finite and non-negative");
}

Objective::Objective(const SparseDepth& sparse, const SegmentationMask& mask, const Luminance* image,
                     const LossConfig& cfg, const SegPrediction* seg)
    : sparse_(&sparse), cfg_(cfg), height_(mask.height()), width_(mask.width())
{
    cfg.validate();
    if (image && (image->rows() != height_ || image->cols() != width_))
        throw InvalidInput("luminance image and mask differ in shape");
    if (cfg.terms.contains(Term::dc) && (sparse.height() != height_ || sparse.width() != width_))
        throw InvalidInput("sparse depth and mask differ in shape");
    if (cfg.terms.contains(Term::gc)) {
        if (cfg.gc.basis == ConstraintBasis::image) {
            if (!image)
                throw InvalidInput("image constraint basis needs a luminance image");
            gc_.emplace(*image, cfg.gc);
        } else {
            gc_.emplace(mask, cfg.gc);
        }
    }
    if (cfg.terms.contains(Term::sms))
        sms_.emplace(mask, cfg.sms, image);
    if (cfg.terms.contains(Term::smooth)) {
        if (!image)
            throw InvalidInput("edge-aware smoothness needs a luminance image");
        smoothWeight_ = edge_weights(*image);
    }
    if (cfg.terms.contains(Term::seg) && seg)
        seg_ = segmentation_cross_entropy(*seg, mask);
}

void Objective::evaluate(const DepthField& field, LossReport& report, LossWorkspace& ws) const
{
    require_shape(field, height_, width_, "segmentation mask");
    report.dc = report.gc = report.sms = report.smooth = 0.0;
    report.gradient.setZero(height_, width_);
    report.smsDegenerate = false;

    if (cfg_.terms.contains(Term::dc)) {
        if (sparse_->empty())
            throw InvalidInput("depth consistency is undefined without samples");
        const double invV = 1.0 / static_cast<double>(sparse_->size());
        for (const auto& s : sparse_->samples()) {
            const PixelIndex p = sparse_->pixel(s);
            const double diff = field.data()[p] - s.depth;
            report.dc += std::abs(diff);
            report.gradient.data()[p] += sign(diff) * invV;
        }
        report.dc *= invV;
    }
    if (gc_ || sms_ || smoothWeight_)
        forward_gradients_into(field, ws.gradients);
    if (gc_)
        report.gc = gc_->accumulate(ws.gradients, report.gradient, report.selected_gc, ws);
    else
        report.selected_gc.clear();
    if (sms_) {
        report.sms = sms_->accumulate(ws.gradients, report.gradient, report.selected_sms, ws);
        report.smsDegenerate = sms_->degenerate();
    } else {
        report.selected_sms.clear();
    }
    if (smoothWeight_)
        report.smooth = accumulate_weighted_smoothness(ws.gradients, *smoothWeight_, report.gradient);
    report.seg = seg_;
    report.total = report.dc + cfg_.alpha * report.seg + report.gc + report.sms + report.smooth;
}

LossReport Objective::evaluate(const DepthField& field) const
{
    LossReport report;
    LossWorkspace ws;
    evaluate(field, report, ws);
    return report;
}

LossReport total_objective(const DepthField& field, const SparseDepth& sparse, const SegmentationMask& mask,
                           const Luminance* image, const LossConfig& cfg, const SegPrediction* seg)
{
    return Objective(sparse, mask, image, cfg, seg).evaluate(field);
}

std::string_view to_string(ConstraintBasis basis)
{
    return basis == ConstraintBasis::mask ? "mask" : "image";
}

std::string_view to_string(SmoothnessVariant variant)
{
    switch (variant) {
    case SmoothnessVariant::selective_mask:
        return "selective_mask";
    case SmoothnessVariant::mask_all_gradients:
        return "mask_all_gradients";
    case SmoothnessVariant::mask_smooth:
        return "mask_smooth";
    case SmoothnessVariant::image_smooth:
        return "image_smooth";
    }
    return "selective_mask";
}

ConstraintBasis parse_constraint_basis(std::string_view text)
{
    if (text == "mask")
        return ConstraintBasis::mask;
    if (text == "image")
        return ConstraintBasis::image;
    throw InvalidInput("unknown constraint basis '" + std::string(text) + "'");
}

SmoothnessVariant parse_smoothness_variant(std::string_view text)
{
    for (auto v : {SmoothnessVariant::selective_mask, SmoothnessVariant::mask_all_gradients,
                   SmoothnessVariant::mask_smooth, SmoothnessVariant::image_smooth})
        if (to_string(v) == text)
            return v;
    throw InvalidInput("unknown smoothness variant '" + std::string(text) + "'");
}

}  // namespace depthprop
