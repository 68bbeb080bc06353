#pragma once

#include "depthprop/grid.hpp"

#include <cmath>
#include <map>

namespace depthprop {

struct MetricsReport {
    double rmse = 0.0;   // m
    double mae = 0.0;    // m
    double rel = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    double irmse = 0.0;  // 1/km
    double imae = 0.0;   // 1/km
    std::size_t evaluatedPixels = 0;
    double capMeters = 10.0;
    bool predictionFloored = false;  // some evaluated prediction was <= 0
};

inline constexpr double kIndoorCapMeters = 10.0;
inline constexpr double kOutdoorCapMeters = 80.0;
inline constexpr double kPredictionFloorMeters = 1e-6;

/// Metrics over pixels with 0 < gt <= capMeters and, when `validGt` is non-null, validGt != 0.
template <typename PredDerived, typename GtDerived>
MetricsReport evaluate(const Eigen::ArrayBase<PredDerived>& pred, const Eigen::ArrayBase<GtDerived>& gt,
                       const Grid<bool>* validGt, double capMeters)
{
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
        throw InvalidInput("prediction and ground truth differ in shape");
    if (validGt && (validGt->rows() != gt.rows() || validGt->cols() != gt.cols()))
        throw InvalidInput("validity mask and ground truth differ in shape");
    if (!(capMeters > 0.0))
        throw InvalidInput("evaluation cap must be positive");

    MetricsReport m;
    m.capMeters = capMeters;
    double se = 0.0, ae = 0.0, rel = 0.0, ise = 0.0, iae = 0.0;
    std::size_t d1 = 0, d2 = 0, d3 = 0, n = 0;
    for (Eigen::Index r = 0; r < gt.rows(); ++r) {
        for (Eigen::Index c = 0; c < gt.cols(); ++c) {
            const double g = static_cast<double>(gt(r, c));
            if (!(g > 0.0 && g <= capMeters) || (validGt && !(*validGt)(r, c)))
                continue;
            double p = static_cast<double>(pred(r, c));
            const double err = p - g;
            se += err * err;
            ae += std::abs(err);
            rel += std::abs(err) / g;
            if (!(p > 0.0)) {
                p = kPredictionFloorMeters;
                m.predictionFloored = true;
            }
            const double ratio = std::max(p / g, g / p);
            d1 += ratio < 1.25;
            d2 += ratio < 1.25 * 1.25;
            d3 += ratio < 1.25 * 1.25 * 1.25;
            const double ierr = 1000.0 / p - 1000.0 / g;
            ise += ierr * ierr;
            iae += std::abs(ierr);
            ++n;
        }
    }
    if (n == 0)
        throw InvalidInput("no ground-truth pixels within (0, cap]");

    const double inv = 1.0 / static_cast<double>(n);
    m.evaluatedPixels = n;
    m.rmse = std::sqrt(se * inv);
    m.mae = ae * inv;
    m.rel = rel * inv;
    m.delta1 = static_cast<double>(d1) * inv;
    m.delta2 = static_cast<double>(d2) * inv;
    m.delta3 = static_cast<double>(d3) * inv;
    m.irmse = std::sqrt(ise * inv);
    m.imae = iae * inv;
    return m;
}

template <typename PredDerived, typename GtDerived>
MetricsReport evaluate(const Eigen::ArrayBase<PredDerived>& pred, const Eigen::ArrayBase<GtDerived>& gt,
                       double capMeters = kIndoorCapMeters)
{
    return evaluate(pred, gt, nullptr, capMeters);
}

/// RMSE per mask label over pixels with 0 < gt <= capMeters. Labels without such pixels are omitted.
template <typename PredDerived, typename GtDerived>
std::map<std::int32_t, double> per_label_rmse(const Eigen::ArrayBase<PredDerived>& pred,
                                              const Eigen::ArrayBase<GtDerived>& gt, const SegmentationMask& mask,
                                              double capMeters = kIndoorCapMeters)
{
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols() || mask.height() != gt.rows()
        || mask.width() != gt.cols())
        throw InvalidInput("prediction, ground truth and mask differ in shape");
    std::map<std::int32_t, std::pair<double, std::size_t>> acc;
    for (Eigen::Index r = 0; r < gt.rows(); ++r) {
        for (Eigen::Index c = 0; c < gt.cols(); ++c) {
            const double g = static_cast<double>(gt(r, c));
            if (!(g > 0.0 && g <= capMeters))
                continue;
            const double err = static_cast<double>(pred(r, c)) - g;
            auto& [sum, count] = acc[mask(r, c)];
            sum += err * err;
            ++count;
        }
    }
    std::map<std::int32_t, double> out;
    for (const auto& [label, entry] : acc)
        out[label] = std::sqrt(entry.first / static_cast<double>(entry.second));
    return out;
}

}  // namespace depthprop
