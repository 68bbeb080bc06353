#include "depthprop/ablation.hpp"

#include "depthprop/report.hpp"

#include <gtest/gtest.h>

#include <set>

namespace depthprop {
namespace {

CaseResult fake_case(const std::string& id, std::vector<double> rmse)
{
    CaseResult c;
    c.id = id;
    for (double r : rmse) {
        MetricsReport m;
        m.rmse = r;
        c.runs.push_back(m);
    }
    c.median = median_metrics(c.runs);
    return c;
}

AblationOptions tiny_options()
{
    AblationOptions o = AblationOptions::defaults();
    o.seeds = {0, 1};
    o.standard.sceneCount = 2;
    o.standard.size = 16;
    o.textured.sceneCount = 2;
    o.textured.size = 16;
    o.solver.maxIterations = 40;
    return o;
}

TEST(Suite, SceneFamily)
{
    const auto specs = make_suite(SuiteSpec{});
    ASSERT_EQ(specs.size(), 10u);
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        EXPECT_EQ(specs[i].height, 128);
        EXPECT_EQ(specs[i].regionCount, 3 + static_cast<int>(i % 5));
        EXPECT_EQ(specs[i].layout, static_cast<Layout>(i % 3));
        EXPECT_NO_THROW(specs[i].validate());
        EXPECT_FALSE(generate_scene(specs[i]).clipped);
        seeds.insert(specs[i].seed);
    }
    EXPECT_EQ(seeds.size(), 10u);
    EXPECT_EQ(SuiteSpec{}.sample_count(), 328);
    EXPECT_THROW(make_suite(SuiteSpec{.sceneCount = 0}), InvalidInput);
}

TEST(Suite, TexturedTwinSharesGeometry)
{
    SuiteSpec textured;
    textured.texture = TextureMode::noise_texture;
    const auto a = make_suite(SuiteSpec{});
    const auto b = make_suite(textured);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Scene sa = generate_scene(a[i]);
        const Scene sb = generate_scene(b[i]);
        EXPECT_TRUE((sa.depth == sb.depth).all());
        EXPECT_EQ(sa.mask, sb.mask);
        EXPECT_FALSE((sa.image == sb.image).all());
    }
}

TEST(Studies, CaseIdsAreUniqueAndChecksResolve)
{
    for (const Study& s : all_studies()) {
        std::set<std::string> ids;
        for (const AblationCase& c : s.cases) {
            EXPECT_TRUE(ids.insert(c.id).second) << s.id << "/" << c.id;
            EXPECT_NO_THROW(c.loss.validate());
        }
        for (const OrderingCheck& o : s.orderings)
            for (const std::string& id : o.chain)
                EXPECT_NO_THROW(s.find(id)) << s.id << "/" << id;
        for (const ImprovementCheck& i : s.improvements) {
            EXPECT_NO_THROW(s.find(i.from));
            EXPECT_NO_THROW(s.find(i.to));
        }
    }
}

TEST(Studies, GuidanceCasesDifferOnlyInGuidance)
{
    const Study g = guidance_study();
    const LossConfig& image = g.find("image").loss;
    const LossConfig& mask = g.find("mask").loss;
    EXPECT_EQ(image.terms, mask.terms);
    EXPECT_EQ(image.gc.windowSize, mask.gc.windowSize);
    EXPECT_EQ(image.gc.basis, ConstraintBasis::image);
    EXPECT_EQ(mask.gc.basis, ConstraintBasis::mask);
    EXPECT_TRUE(g.find("image").textured && g.find("mask").textured);
}

TEST(MedianMetrics, OddAndEvenCounts)
{
    EXPECT_EQ(fake_case("a", {3.0, 1.0, 2.0}).median.rmse, 2.0);
    EXPECT_EQ(fake_case("a", {4.0, 1.0, 2.0, 3.0}).median.rmse, 2.5);
    EXPECT_THROW(median_metrics({}), InvalidInput);
}

TEST(Checks, StrictOrderingWithPairFraction)
{
    Study s;
    s.orderings = {{"o", "", {"worst", "best"}, true, 0.8}};
    // Median holds and 4 of 5 pairs hold.
    auto r = evaluate_checks(s, {fake_case("worst", {5, 5, 5, 5, 1}), fake_case("best", {1, 1, 1, 1, 2})});
    ASSERT_EQ(r.size(), 1u);
    EXPECT_TRUE(r[0].medianHolds);
    EXPECT_EQ(r[0].pairFractions, std::vector<double>{0.8});
    EXPECT_TRUE(r[0].passed);
    // 3 of 5 pairs is not enough even though the median holds.
    r = evaluate_checks(s, {fake_case("worst", {5, 5, 5, 1, 1}), fake_case("best", {1, 1, 1, 2, 2})});
    EXPECT_TRUE(r[0].medianHolds);
    EXPECT_FALSE(r[0].passed);
    // Ties fail a strict ordering.
    r = evaluate_checks(s, {fake_case("worst", {1, 1}), fake_case("best", {1, 1})});
    EXPECT_FALSE(r[0].passed);
}

TEST(Checks, NonStrictOrderingAcceptsTies)
{
    Study s;
    s.orderings = {{"o", "", {"a", "b", "c"}, false, 0.0}};
    auto r = evaluate_checks(s, {fake_case("a", {2, 2}), fake_case("b", {2, 2}), fake_case("c", {1, 3})});
    EXPECT_TRUE(r[0].passed);
    r = evaluate_checks(s, {fake_case("a", {2, 2}), fake_case("b", {1, 1}), fake_case("c", {3, 3})});
    EXPECT_FALSE(r[0].passed);
}

TEST(Checks, Improvement)
{
    Study s;
    s.improvements = {{"i", "", "from", "to", 0.5}};
    auto r = evaluate_checks(s, {fake_case("from", {4.0}), fake_case("to", {2.0})});
    ASSERT_EQ(r.size(), 1u);
    EXPECT_DOUBLE_EQ(r[0].relativeImprovement, 0.5);
    EXPECT_TRUE(r[0].passed);
    r = evaluate_checks(s, {fake_case("from", {4.0}), fake_case("to", {2.1})});
    EXPECT_FALSE(r[0].passed);
}

TEST(Checks, SkippedWhenCaseMissing)
{
    Study s;
    s.orderings = {{"o", "", {"a", "b"}, true, 0.0}};
    s.improvements = {{"i", "", "a", "b", 0.5}};
    EXPECT_TRUE(evaluate_checks(s, {fake_case("a", {1.0})}).empty());
}

TEST(RunStudy, TinySuiteIsDeterministic)
{
    const AblationOptions o = tiny_options();
    const StudyResult a = run_study(guidance_study(), o);
    const StudyResult b = run_study(guidance_study(), o);
    ASSERT_EQ(a.cases.size(), 2u);
    for (std::size_t i = 0; i < a.cases.size(); ++i) {
        ASSERT_EQ(a.cases[i].runs.size(), 4u);  // 2 scenes x 2 seeds
        for (std::size_t k = 0; k < 4; ++k)
            EXPECT_EQ(a.cases[i].runs[k].rmse, b.cases[i].runs[k].rmse);
        EXPECT_EQ(a.cases[i].diverged, 0);
    }
    EXPECT_EQ(a.checks.size(), 1u);
}

TEST(RunStudy, OnlyFilterAndProgress)
{
    AblationOptions o = tiny_options();
    o.only = {"dc", "dc+gc"};
    int ticks = 0;
    o.progress = [&](const std::string&) { ++ticks; };
    const StudyResult r = run_study(term_study(), o);
    ASSERT_EQ(r.cases.size(), 2u);
    EXPECT_EQ(r.cases[0].id, "dc");
    EXPECT_EQ(ticks, 4);
    // Only the improvement check has both of its cases.
    ASSERT_EQ(r.checks.size(), 1u);
    EXPECT_EQ(r.checks[0].id, "gc-gain");
    EXPECT_NO_THROW(r.find("dc+gc"));
    EXPECT_THROW(r.find("dc+sms"), InvalidInput);
}

TEST(RunStudy, JsonReport)
{
    AblationOptions o = tiny_options();
    o.only = {"window-8", "window-16"};
    const StudyResult r = run_study(window_study(), o);
    const auto doc = parse_document(ablation_to_json({r}, o).dump(), kAblationSchema);
    ASSERT_EQ(doc.at("studies").size(), 1u);
    const auto& study = doc.at("studies")[0];
    EXPECT_EQ(study.at("id"), "windows");
    EXPECT_EQ(study.at("cases").size(), 2u);
    EXPECT_EQ(study.at("cases")[0].at("rmse_per_run").size(), 4u);
    EXPECT_EQ(doc.at("seeds"), nlohmann::json({0, 1}));
}

}  // namespace
}  // namespace depthprop
