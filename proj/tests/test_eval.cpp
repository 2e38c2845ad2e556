#include "oddshts/eval.hpp"
#include "oddshts/io.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace oddshts;

namespace {

ExperimentConfig small_config(std::uint64_t seed, int runs) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.runs = runs;
    cfg.length = 200;
    cfg.train_length = 170;
    cfg.horizon = 30;
    return cfg;
}

BackendConfig backend(BackendKind kind) {
    BackendConfig b;
    b.kind = kind;
    return b;
}

}  // namespace

TEST(Rmspe, TenPercentErrors) {
    const std::vector<double> a{100, 200}, p{110, 180};
    EXPECT_NEAR(rmspe(a, p).percent, 10.0, 1e-12);
}

TEST(Rmspe, PerfectForecastIsZero) {
    const std::vector<double> a{3, 1, 4};
    EXPECT_EQ(rmspe(a, a).percent, 0.0);
}

TEST(Rmspe, SkipDropsZeroActuals) {
    const std::vector<double> a{0, 100}, p{5, 110};
    const auto r = rmspe(a, p);
    EXPECT_NEAR(r.percent, 10.0, 1e-12);
    EXPECT_EQ(r.excluded, 1u);
}

TEST(Rmspe, EpsilonFloorsDenominator) {
    const std::vector<double> a{0, 100}, p{1, 100};
    const auto r = rmspe(a, p, ZeroPolicy::parse("epsilon:1"));
    EXPECT_NEAR(r.percent, 100.0 * std::sqrt(0.5), 1e-12);
    EXPECT_EQ(r.excluded, 0u);
}

TEST(Rmspe, AllZeroActualsUndefined) {
    const std::vector<double> a{0, 0}, p{1, 2};
    try {
        (void)rmspe(a, p);
        FAIL();
    } catch (const UndefinedScoreError& e) {
        EXPECT_EQ(e.excluded(), 2u);
    }
}

TEST(Rmspe, LengthMismatchRejected) {
    EXPECT_THROW((void)rmspe(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
}

TEST(RmspeProperties, ScaleInvariantAndZeroOnlyWhenEqual) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.5, 50.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> a(8), p(8), sa(8), sp(8);
        const double k = u(rng);
        for (std::size_t i = 0; i < 8; ++i) {
            a[i] = u(rng);
            p[i] = u(rng);
            sa[i] = k * a[i];
            sp[i] = k * p[i];
        }
        const double base = rmspe(a, p).percent;
        EXPECT_NEAR(rmspe(sa, sp).percent, base, 1e-9 * std::max(1.0, base));
        EXPECT_GT(base, 0.0);
        EXPECT_EQ(rmspe(a, a).percent, 0.0);
    }
}

TEST(Summary, QuartilesOfSmallSets) {
    const auto five = summarize({5, 3, 1, 4, 2});
    EXPECT_EQ(five.q1, 2.0);
    EXPECT_EQ(five.median, 3.0);
    EXPECT_EQ(five.q3, 4.0);
    EXPECT_EQ(five.min, 1.0);
    EXPECT_EQ(five.max, 5.0);
    const auto four = summarize({1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(four.q1, 1.75);
    EXPECT_DOUBLE_EQ(four.median, 2.5);
    EXPECT_DOUBLE_EQ(four.q3, 3.25);
}

TEST(Summary, OutlierFences) {
    const auto s = summarize({1, 2, 3, 4, 100});
    EXPECT_EQ(s.upper_fence, 7.0);
    EXPECT_EQ(s.lower_fence, -1.0);
    EXPECT_TRUE(s.is_outlier(100));
    EXPECT_FALSE(s.is_outlier(7));
}

TEST(Evaluate, PerfectForecastScoresZero) {
    const Hierarchy h(std::vector<MidNode>{{"A", {"a1", "a2"}}, {"B", {"b1"}}});
    const auto lv = aggregate(h, SeriesFrame({"a1", "a2", "b1"}, {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}));
    const auto scores = evaluate(lv, lv);
    EXPECT_EQ(scores[0].rmspe.at("TOP"), 0.0);
    EXPECT_EQ(scores[1].rmspe.size(), 2u);
    EXPECT_EQ(scores[2].rmspe.size(), 3u);
    for (const auto& s : scores)
        for (const auto& [id, v] : s.rmspe) EXPECT_EQ(v, 0.0);
}

TEST(Evaluate, PerNodeScoresMatchDirectComputation) {
    const Hierarchy h(std::vector<MidNode>{{"A", {"a1", "a2"}}, {"B", {"b1"}}});
    const auto actual = aggregate(h, SeriesFrame({"a1", "a2", "b1"}, {{1, 2, 0}, {4, 5, 6}, {7, 8, 9}}));
    const auto fc = aggregate(h, SeriesFrame({"a1", "a2", "b1"}, {{2, 2, 1}, {4, 6, 6}, {7, 9, 9}}));
    const auto scores = evaluate(fc, actual);
    EXPECT_DOUBLE_EQ(scores[2].rmspe.at("a1"), 100.0 * std::sqrt(1.0 / 2.0));
    EXPECT_EQ(scores[2].skipped_points.at("a1"), 1u);
    EXPECT_DOUBLE_EQ(scores[2].rmspe.at("b1"), rmspe(actual.bottom.at("b1"), fc.bottom.at("b1")).percent);
    EXPECT_DOUBLE_EQ(scores[1].rmspe.at("A"), rmspe(actual.mid.at("A"), fc.mid.at("A")).percent);
}

TEST(Evaluate, OutlierNodesListed) {
    LevelSeries fc, actual;
    fc.top = actual.top = {10};
    for (int i = 0; i < 5; ++i) {
        const std::string id = "b" + std::to_string(i);
        actual.bottom[id] = {100};
        fc.bottom[id] = {i == 4 ? 300.0 : 100.0 + i};
    }
    const auto scores = evaluate(fc, actual);
    EXPECT_EQ(scores[2].outliers, (std::vector<std::string>{"b4"}));
}

TEST(Evaluate, AllZeroNodeUndefined) {
    LevelSeries fc, actual;
    fc.top = actual.top = {1, 1};
    actual.bottom["z"] = {0, 0};
    fc.bottom["z"] = {1, 1};
    const auto scores = evaluate(fc, actual);
    EXPECT_EQ(scores[2].undefined, (std::vector<std::string>{"z"}));
    EXPECT_TRUE(scores[2].rmspe.empty());
}

TEST(Evaluate, HorizonMismatchRejected) {
    LevelSeries fc, actual;
    fc.top = {1, 2, 3};
    actual.top = {1, 2};
    EXPECT_THROW((void)evaluate(fc, actual), DataError);
}

TEST(Experiment, ConstantDataScoresZero) {
    ExperimentConfig cfg = small_config(1, 1);
    cfg.backends = {backend(BackendKind::naive)};
    cfg.smoothing = 0.0;
    cfg.generator = [&](const HierarchySpec& spec, std::uint64_t) {
        std::vector<std::vector<double>> cols;
        for (std::size_t i = 0; i < spec.selected_ids.size(); ++i)
            cols.emplace_back(static_cast<std::size_t>(cfg.length), static_cast<double>(i % 7 + 1));
        return SeriesFrame(spec.selected_ids, std::move(cols));
    };
    const auto report = experiment(cfg);
    ASSERT_EQ(report.failed_runs(), 0u);
    for (const auto& level : report.pooled.at("naive"))
        for (const auto& s : level.scores) EXPECT_NEAR(s.rmspe, 0.0, 1e-7) << s.node;
}

TEST(Experiment, SameSeedSameReport) {
    auto cfg = small_config(5, 3);
    cfg.backends = {backend(BackendKind::naive), backend(BackendKind::ar)};
    const auto a = io::to_json(experiment(cfg)).dump();
    const auto b = io::to_json(experiment(cfg)).dump();
    EXPECT_EQ(a, b);
    cfg.seed = 6;
    EXPECT_NE(io::to_json(experiment(cfg)).dump(), a);
}

TEST(Experiment, JobCountDoesNotChangeReport) {
    auto cfg = small_config(11, 5);
    cfg.backends = {backend(BackendKind::ar), backend(BackendKind::mean)};
    cfg.jobs = 1;
    const auto serial = io::to_json(experiment(cfg));
    cfg.jobs = 3;
    const auto parallel = io::to_json(experiment(cfg));
    EXPECT_EQ(serial.dump(), parallel.dump());
}

TEST(Experiment, PooledScoresMatchSingleRun) {
    auto cfg = small_config(21, 3);
    const auto report = experiment(cfg);
    const auto seeds = cfg.seeds();
    const auto spec = sample_hierarchy_spec(cfg.pool_size, derive_seed(seeds[1], 0));
    const auto h = spec.to_hierarchy();
    const auto levels = aggregate(h, simulate_for_spec(spec, cfg.length, cfg.ranges, derive_seed(seeds[1], 1)));
    RunConfig rc;
    rc.train_length = cfg.train_length;
    rc.horizon = cfg.horizon;
    const auto fc = run_forecast(h, levels, rc);
    const auto actual = levels.slice(170, 30);
    const auto& pooled = report.pooled.at("ar");
    for (const auto& s : pooled[2].scores) {
        if (s.run != 1) continue;
        const auto r = rmspe(actual.bottom.at(s.node), fc.bottom.at(s.node).values);
        EXPECT_EQ(s.rmspe, r.percent) << s.node;
    }
    std::vector<double> values;
    for (const auto& s : pooled[1].scores) values.push_back(s.rmspe);
    std::sort(values.begin(), values.end());
    EXPECT_EQ(pooled[1].summary.median, quantile_sorted(values, 0.5));
    EXPECT_EQ(pooled[1].summary.count, values.size());
}

TEST(Experiment, FailingRunRecordedAndExcluded) {
    auto cfg = small_config(3, 6);
    cfg.backends = {backend(BackendKind::naive)};
    cfg.generator = [&](const HierarchySpec& spec, std::uint64_t seed) {
        if (spec.total_children() % 2 == 1) throw DataError("odd hierarchy");
        return simulate_for_spec(spec, cfg.length, cfg.ranges, seed);
    };
    const auto report = experiment(cfg);
    std::size_t failed = 0, nodes = 0;
    for (const auto& run : report.runs) {
        EXPECT_EQ(run.failed, run.spec.total_children() % 2 == 1);
        if (run.failed) {
            ++failed;
            EXPECT_NE(run.error.find("odd hierarchy"), std::string::npos);
            EXPECT_TRUE(run.results.empty());
        } else {
            nodes += static_cast<std::size_t>(run.spec.total_children());
        }
    }
    EXPECT_EQ(report.failed_runs(), failed);
    const auto& bottom = report.pooled.at("naive")[2];
    EXPECT_EQ(bottom.scores.size() + bottom.undefined_nodes, nodes);
}

TEST(Experiment, InvalidConfigRejected) {
    auto cfg = small_config(1, 2);
    cfg.backends = {backend(BackendKind::ar), backend(BackendKind::ar)};
    EXPECT_THROW((void)experiment(cfg), ParameterError);
    cfg = small_config(1, 0);
    EXPECT_THROW((void)experiment(cfg), ParameterError);
    cfg = small_config(1, 2);
    cfg.train_length = 190;
    EXPECT_THROW((void)experiment(cfg), ParameterError);
}

TEST(Experiment, LevelMediansIncreaseDownTheHierarchy) {
    ExperimentConfig cfg;
    cfg.seed = 42;
    cfg.runs = 20;
    const auto report = experiment(cfg);
    EXPECT_EQ(report.failed_runs(), 0u);
    const auto& ar = report.pooled.at("ar");
    EXPECT_LE(ar[0].summary.median, ar[1].summary.median);
    EXPECT_LE(ar[1].summary.median, ar[2].summary.median);
}
