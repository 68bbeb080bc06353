#include "depthprop/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace depthprop {
namespace {

void expect_close(const MetricsReport& a, const MetricsReport& b, double tol)
{
    auto near = [tol](double x, double y) { return std::abs(x - y) <= tol * std::max(1.0, std::abs(y)); };
    EXPECT_TRUE(near(a.rmse, b.rmse)) << a.rmse << " vs " << b.rmse;
    EXPECT_TRUE(near(a.mae, b.mae));
    EXPECT_TRUE(near(a.rel, b.rel));
    EXPECT_TRUE(near(a.irmse, b.irmse));
    EXPECT_TRUE(near(a.imae, b.imae));
    EXPECT_TRUE(near(a.delta1, b.delta1));
    EXPECT_TRUE(near(a.delta2, b.delta2));
    EXPECT_TRUE(near(a.delta3, b.delta3));
    EXPECT_EQ(a.evaluatedPixels, b.evaluatedPixels);
}

TEST(Metrics, PerfectPrediction)
{
    DepthField gt(2, 3);
    gt << 1, 2, 3, 4, 5, 6;
    const MetricsReport m = evaluate(gt, gt);
    EXPECT_EQ(m.rmse, 0.0);
    EXPECT_EQ(m.rel, 0.0);
    EXPECT_EQ(m.delta1, 1.0);
    EXPECT_EQ(m.delta2, 1.0);
    EXPECT_EQ(m.delta3, 1.0);
    EXPECT_EQ(m.evaluatedPixels, 6u);
}

TEST(Metrics, HandExample)
{
    DepthField pred(1, 2);
    DepthField gt(1, 2);
    pred << 1, 2;
    gt << 1, 4;
    const MetricsReport m = evaluate(pred, gt);
    EXPECT_EQ(m.rmse, std::sqrt(2.0));
    EXPECT_EQ(m.mae, 1.0);
    EXPECT_EQ(m.rel, 0.25);
    EXPECT_EQ(m.delta1, 0.5);
    // 1000/2 - 1000/4 = 250 1/km on one pixel of two.
    EXPECT_DOUBLE_EQ(m.imae, 125.0);
}

TEST(Metrics, CapAndValidityExcludePixels)
{
    DepthField pred = DepthField::Constant(2, 2, 3.0);
    DepthField gt(2, 2);
    gt << 3, 0, 12, 3;
    MetricsReport m = evaluate(pred, gt, 10.0);
    EXPECT_EQ(m.evaluatedPixels, 2u);
    EXPECT_EQ(m.rmse, 0.0);
    m = evaluate(pred, gt, 80.0);
    EXPECT_EQ(m.evaluatedPixels, 3u);
    Grid<bool> valid = Grid<bool>::Constant(2, 2, true);
    valid(1, 1) = false;
    EXPECT_EQ(evaluate(pred, gt, &valid, 10.0).evaluatedPixels, 1u);
}

TEST(Metrics, FloorsNonPositivePredictions)
{
    DepthField pred(1, 2);
    DepthField gt(1, 2);
    pred << 0.0, 2.0;
    gt << 1.0, 2.0;
    const MetricsReport m = evaluate(pred, gt);
    EXPECT_TRUE(m.predictionFloored);
    EXPECT_TRUE(std::isfinite(m.irmse));
    EXPECT_EQ(m.delta3, 0.5);
}

TEST(Metrics, Errors)
{
    const DepthField a = DepthField::Ones(2, 2);
    EXPECT_THROW(evaluate(a, DepthField::Ones(2, 3)), InvalidInput);
    EXPECT_THROW(evaluate(a, DepthField::Zero(2, 2)), InvalidInput);
    EXPECT_THROW(evaluate(a, a, 0.0), InvalidInput);
}

TEST(Metrics, DeltaOrdering)
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const DepthField pred = testing::random_field(4, 4, rng, 0.5, 9.0);
        const DepthField gt = testing::random_field(4, 4, rng, 0.5, 9.0);
        const MetricsReport m = evaluate(pred, gt);
        EXPECT_LE(m.delta1, m.delta2);
        EXPECT_LE(m.delta2, m.delta3);
    }
}

TEST(Metrics, MatchesNaiveRecomputation)
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::Index h = dim(rng);
        const Eigen::Index w = dim(rng);
        DepthField pred = testing::random_field(h, w, rng, -0.5, 12.0);
        DepthField gt = testing::random_field(h, w, rng, 0.1, 12.0);
        for (Eigen::Index i = 0; i < gt.size(); ++i)
            if (u(rng) < 0.15)
                gt.data()[i] = 0.0;
        gt.data()[0] = 1.0 + u(rng);
        const double cap = trial % 2 ? kIndoorCapMeters : kOutdoorCapMeters;
        expect_close(evaluate(pred, gt, cap), testing::naive_metrics(pred, gt, cap), 1e-12);
    }
}

TEST(Metrics, PerLabelRmse)
{
    DepthField pred(2, 2);
    DepthField gt(2, 2);
    pred << 1, 2, 3, 5;
    gt << 1, 1, 3, 3;
    LabelGrid labels(2, 2);
    labels << 0, 0, 1, 1;
    const auto per = per_label_rmse(pred, gt, SegmentationMask(labels));
    ASSERT_EQ(per.size(), 2u);
    EXPECT_DOUBLE_EQ(per.at(0), std::sqrt(0.5));
    EXPECT_DOUBLE_EQ(per.at(1), std::sqrt(2.0));
}

}  // namespace
}  // namespace depthprop
