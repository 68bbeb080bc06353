#pragma once

// Straightforward re-derivations of the loss terms and metrics used as test oracles. They share no code with
// the library beyond the data types: loops run over raw (row, col) coordinates and selections come
// from a full sort.

#include "depthprop/losses.hpp"
#include "depthprop/metrics.hpp"

#include "test_util.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace depthprop::testing {

struct OracleTerm {
    double value = 0.0;
    std::vector<PixelSet> selected;
};

inline std::vector<double> direct_magnitudes(const DepthField& f)
{
    std::vector<double> m(static_cast<std::size_t>(f.size()));
    for (Eigen::Index r = 0; r < f.rows(); ++r)
        for (Eigen::Index c = 0; c < f.cols(); ++c)
            m[static_cast<std::size_t>(r * f.cols() + c)] = direct_magnitude(f, r, c);
    return m;
}

inline std::vector<double> direct_edge_weights(const Luminance& image)
{
    DepthField copy = image;
    std::vector<double> w = direct_magnitudes(copy);
    for (double& x : w)
        x = std::exp(-x);
    return w;
}

/// Windowed top-N constraint. `labels` drives edge exclusion, `weights` the image basis; pass
/// exactly one of them.
inline OracleTerm oracle_gc(const DepthField& f, const LabelGrid* labels, const std::vector<double>* weights,
                            Eigen::Index ws, double fraction)
{
    const Eigen::Index h = f.rows();
    const Eigen::Index w = f.cols();
    std::vector<double> key = direct_magnitudes(f);
    if (weights)
        for (std::size_t i = 0; i < key.size(); ++i)
            key[i] *= (*weights)[i];

    OracleTerm out;
    double sum = 0.0;
    int active = 0;
    for (Eigen::Index r0 = 0; r0 < h; r0 += ws) {
        for (Eigen::Index c0 = 0; c0 < w; c0 += ws) {
            std::vector<PixelIndex> cand;
            std::size_t count = 0;
            for (Eigen::Index r = r0; r < std::min(h, r0 + ws); ++r) {
                for (Eigen::Index c = c0; c < std::min(w, c0 + ws); ++c) {
                    ++count;
                    if (labels) {
                        const auto l = (*labels)(r, c);
                        if ((c + 1 < w && (*labels)(r, c + 1) != l) || (r + 1 < h && (*labels)(r + 1, c) != l))
                            continue;
                    }
                    cand.push_back(r * w + c);
                }
            }
            const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * count)));
            PixelSet sel = sort_top_k(cand, key, n);
            if (!sel.empty()) {
                double s = 0.0;
                for (PixelIndex p : sel)
                    s += key[static_cast<std::size_t>(p)];
                sum += s / static_cast<double>(sel.size());
                ++active;
            }
            out.selected.push_back(std::move(sel));
        }
    }
    out.value = active ? sum / active : 0.0;
    return out;
}

/// Selective per-region smoothness; `all` keeps every candidate.
inline OracleTerm oracle_sms(const DepthField& f, const LabelGrid& labels, double fraction, bool all)
{
    const Eigen::Index h = f.rows();
    const Eigen::Index w = f.cols();
    const std::vector<double> key = direct_magnitudes(f);
    std::map<std::int32_t, std::vector<PixelIndex>> regions;
    for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < w; ++c)
            regions[labels(r, c)];
    for (Eigen::Index r = 0; r + 1 < h; ++r)
        for (Eigen::Index c = 0; c + 1 < w; ++c)
            if (labels(r, c + 1) == labels(r, c) && labels(r + 1, c) == labels(r, c))
                regions[labels(r, c)].push_back(r * w + c);

    OracleTerm out;
    double sum = 0.0;
    int active = 0;
    for (auto& [label, cand] : regions) {
        std::size_t n = cand.size();
        if (!all && n > 0) {
            n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(cand.size()) - 1e-9));
            n = std::clamp<std::size_t>(n, 1, cand.size());
        }
        PixelSet sel = sort_top_k(cand, key, n);
        if (!sel.empty()) {
            double s = 0.0;
            for (PixelIndex p : sel)
                s += key[static_cast<std::size_t>(p)];
            sum += s / static_cast<double>(sel.size());
            ++active;
        }
        out.selected.push_back(std::move(sel));
    }
    out.value = active ? sum / active : 0.0;
    return out;
}

/// Mean of weight * magnitude over all pixels.
inline double oracle_smooth(const DepthField& f, const std::vector<double>& weights)
{
    const std::vector<double> m = direct_magnitudes(f);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        s += weights[i] * m[i];
    return s / static_cast<double>(m.size());
}

inline double oracle_dc(const DepthField& f, const SparseDepth& sparse)
{
    double s = 0.0;
    for (const auto& x : sparse.samples())
        s += std::abs(f(x.row, x.col) - x.depth);
    return s / static_cast<double>(sparse.size());
}

/// Central-difference check of LossReport::gradient over pixels where the objective is locally
/// linear: a perturbation of +-h leaves the analytic gradient and every selection unchanged.
struct FdCheck {
    double maxAbsError = 0.0;
    double maxAnalytic = 0.0;
    std::size_t stablePixels = 0;

    double relative_error() const { return maxAnalytic > 0.0 ? maxAbsError / maxAnalytic : maxAbsError; }
};

inline FdCheck finite_difference_check(const Objective& objective, const DepthField& field, double h)
{
    const LossReport base = objective.evaluate(field);
    FdCheck out;
    out.maxAnalytic = base.gradient.abs().maxCoeff();
    DepthField probe = field;
    for (Eigen::Index i = 0; i < field.size(); ++i) {
        probe.data()[i] = field.data()[i] + h;
        const LossReport plus = objective.evaluate(probe);
        probe.data()[i] = field.data()[i] - h;
        const LossReport minus = objective.evaluate(probe);
        probe.data()[i] = field.data()[i];
        const bool stable = (plus.gradient == base.gradient).all() && (minus.gradient == base.gradient).all()
                         && plus.selected_gc == base.selected_gc && minus.selected_gc == base.selected_gc
                         && plus.selected_sms == base.selected_sms && minus.selected_sms == base.selected_sms;
        if (!stable)
            continue;
        ++out.stablePixels;
        const double numeric = (plus.total - minus.total) / (2.0 * h);
        out.maxAbsError = std::max(out.maxAbsError, std::abs(numeric - base.gradient.data()[i]));
    }
    return out;
}

/// Metrics recomputed from collected (pred, gt) pairs, one formula per statistic.
inline MetricsReport naive_metrics(const DepthField& pred, const DepthField& gt, double cap)
{
    std::vector<std::pair<double, double>> pairs;
    for (Eigen::Index i = 0; i < gt.size(); ++i)
        if (gt.data()[i] > 0.0 && gt.data()[i] <= cap)
            pairs.emplace_back(pred.data()[i], gt.data()[i]);
    MetricsReport m;
    const double n = static_cast<double>(pairs.size());
    m.evaluatedPixels = pairs.size();
    double se = 0.0, ae = 0.0, rel = 0.0, ise = 0.0, iae = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
    for (auto [p, g] : pairs) {
        se += (p - g) * (p - g);
        ae += std::abs(p - g);
        rel += std::abs(p - g) / g;
        const double pf = p > 0.0 ? p : kPredictionFloorMeters;
        const double ratio = std::max(pf / g, g / pf);
        d1 += ratio < 1.25 ? 1.0 : 0.0;
        d2 += ratio < std::pow(1.25, 2) ? 1.0 : 0.0;
        d3 += ratio < std::pow(1.25, 3) ? 1.0 : 0.0;
        const double ie = 1000.0 / pf - 1000.0 / g;
        ise += ie * ie;
        iae += std::abs(ie);
    }
    m.rmse = std::sqrt(se / n);
    m.mae = ae / n;
    m.rel = rel / n;
    m.delta1 = d1 / n;
    m.delta2 = d2 / n;
    m.delta3 = d3 / n;
    m.irmse = std::sqrt(ise / n);
    m.imae = iae / n;
    return m;
}

}  // namespace depthprop::testing
