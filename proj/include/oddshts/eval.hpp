#pragma once

#include "oddshts/error.hpp"
#include "oddshts/hierarchy.hpp"
#include "oddshts/pipeline.hpp"
#include "oddshts/simulate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace oddshts {

/// How RMSPE treats zero actuals: drop the point, or divide by max(actual, e).
struct ZeroPolicy {
    enum class Kind { skip, epsilon };
    Kind kind = Kind::skip;
    double epsilon = 0.0;

    [[nodiscard]] static ZeroPolicy parse(std::string_view text) {
        if (text == "skip") return {};
        constexpr std::string_view prefix = "epsilon:";
        if (text.starts_with(prefix)) {
            const std::string value(text.substr(prefix.size()));
            double e = 0.0;
            try {
                std::size_t used = 0;
                e = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw ParameterError("zero policy: cannot parse epsilon '" + value + "'");
            }
            if (!(e > 0.0) || !std::isfinite(e)) throw ParameterError("zero policy epsilon must be > 0");
            return {Kind::epsilon, e};
        }
        throw ParameterError("unknown zero policy '" + std::string(text) + "' (expected skip|epsilon:E)");
    }

    [[nodiscard]] std::string str() const {
        return kind == Kind::skip ? "skip" : "epsilon:" + std::to_string(epsilon);
    }
};

struct RmspeResult {
    double percent = 0.0;
    std::size_t excluded = 0;
};

/// 100 * sqrt(mean(((actual - predicted) / actual)^2)) over included points.
[[nodiscard]] inline RmspeResult rmspe(std::span<const double> actual, std::span<const double> predicted,
                                       ZeroPolicy policy = {}) {
    if (actual.size() != predicted.size())
        throw DataError("rmspe: actual has " + std::to_string(actual.size()) + " points, predicted " +
                        std::to_string(predicted.size()));
    if (actual.empty()) throw DataError("rmspe: no points");
    RmspeResult out;
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t t = 0; t < actual.size(); ++t) {
        double denom = actual[t];
        if (policy.kind == ZeroPolicy::Kind::skip) {
            if (denom == 0.0) {
                ++out.excluded;
                continue;
            }
        } else {
            denom = std::max(denom, policy.epsilon);
        }
        const double rel = (actual[t] - predicted[t]) / denom;
        sum += rel * rel;
        ++used;
    }
    if (used == 0)
        throw UndefinedScoreError("rmspe undefined: all " + std::to_string(out.excluded) +
                                      " points have zero actuals",
                                  out.excluded);
    out.percent = 100.0 * std::sqrt(sum / static_cast<double>(used));
    return out;
}

/// Five-number summary with 1.5 IQR whisker fences.
struct BoxSummary {
    std::size_t count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double lower_fence = 0.0;
    double upper_fence = 0.0;

    [[nodiscard]] bool is_outlier(double v) const noexcept { return v < lower_fence || v > upper_fence; }
};

/// Linear-interpolation quantile of sorted data (R type 7 / numpy default).
[[nodiscard]] inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw DataError("quantile of empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

[[nodiscard]] inline BoxSummary summarize(std::vector<double> values) {
    BoxSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    const double iqr = s.q3 - s.q1;
    s.lower_fence = s.q1 - 1.5 * iqr;
    s.upper_fence = s.q3 + 1.5 * iqr;
    return s;
}

struct LevelScores {
    Level level = Level::top;
    std::map<std::string, double> rmspe;              // percent, per node
    std::map<std::string, std::size_t> skipped_points;
    std::vector<std::string> undefined;               // every actual was zero
    BoxSummary summary;
    std::vector<std::string> outliers;
};

using LevelScoreSet = std::array<LevelScores, 3>;  // indexed by Level

namespace detail {

inline void score_node(LevelScores& scores, const std::string& id, std::span<const double> actual,
                       std::span<const double> predicted, ZeroPolicy policy) {
    if (actual.size() != predicted.size())
        throw DataError("horizon mismatch for '" + id + "': " + std::to_string(predicted.size()) +
                        " forecast steps vs " + std::to_string(actual.size()) + " actuals");
    try {
        const auto r = rmspe(actual, predicted, policy);
        scores.rmspe.emplace(id, r.percent);
        scores.skipped_points.emplace(id, r.excluded);
    } catch (const UndefinedScoreError& e) {
        scores.undefined.push_back(id);
        scores.skipped_points.emplace(id, e.excluded());
    }
}

inline void finish(LevelScores& scores) {
    std::vector<double> values;
    for (const auto& [id, v] : scores.rmspe) values.push_back(v);
    scores.summary = summarize(values);
    for (const auto& [id, v] : scores.rmspe)
        if (scores.summary.is_outlier(v)) scores.outliers.push_back(id);
}

}  // namespace detail

/// RMSPE of every node against the actual values over the horizon, with
/// per-level box summaries.
[[nodiscard]] inline LevelScoreSet evaluate(const LevelSeries& forecast, const LevelSeries& actual,
                                            ZeroPolicy policy = {}) {
    LevelScoreSet out;
    out[0].level = Level::top;
    out[1].level = Level::mid;
    out[2].level = Level::bottom;
    detail::score_node(out[0], kTopId, actual.top, forecast.top, policy);
    auto level = [&](LevelScores& scores, const auto& fmap, const auto& amap) {
        for (const auto& [id, pred] : fmap) {
            auto it = amap.find(id);
            if (it == amap.end()) throw DataError("no actual values for forecast node '" + id + "'");
            detail::score_node(scores, id, it->second, pred, policy);
        }
    };
    level(out[1], forecast.mid, actual.mid);
    level(out[2], forecast.bottom, actual.bottom);
    for (auto& s : out) detail::finish(s);
    return out;
}

[[nodiscard]] inline LevelScoreSet evaluate(const HierForecast& forecast, const LevelSeries& actual,
                                            ZeroPolicy policy = {}) {
    return evaluate(forecast.as_levels(), actual, policy);
}

/// Produces the bottom-level frame for one run (test hook; defaults to INARMA).
using DataGenerator = std::function<SeriesFrame(const HierarchySpec&, std::uint64_t seed)>;

struct ExperimentConfig {
    int runs = 20;
    std::vector<BackendConfig> backends{BackendConfig{}};
    ParamRanges ranges;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> run_seeds;  // derived from `seed` when empty
    std::int64_t pool_size = 1000;
    std::int64_t length = 1000;
    int train_length = 970;
    int horizon = 30;
    double smoothing = kDefaultSmoothing;
    ZeroPolicy zero_policy;
    unsigned jobs = 1;
    DataGenerator generator;

    void validate() const {
        if (runs < 1) throw ParameterError("experiment needs at least one run");
        if (backends.empty()) throw ParameterError("experiment needs at least one backend");
        if (!run_seeds.empty() && run_seeds.size() != static_cast<std::size_t>(runs))
            throw ParameterError("run seed list length differs from the run count");
        if (train_length < 1 || horizon < 1 || train_length + horizon > length)
            throw ParameterError("train_length + horizon must fit in the simulated length");
        ranges.validate();
        std::vector<BackendKind> kinds;
        for (const auto& b : backends) {
            b.validate();
            if (std::find(kinds.begin(), kinds.end(), b.kind) != kinds.end())
                throw ParameterError("backend '" + std::string(to_string(b.kind)) + "' listed twice");
            kinds.push_back(b.kind);
        }
    }

    [[nodiscard]] std::vector<std::uint64_t> seeds() const {
        if (!run_seeds.empty()) return run_seeds;
        std::vector<std::uint64_t> out;
        const std::uint64_t base = derive_seed(seed, 0x52554E53ULL);
        for (int r = 0; r < runs; ++r) out.push_back(derive_seed(base, static_cast<std::uint64_t>(r)));
        return out;
    }
};

struct BackendRun {
    std::string backend;
    LevelScoreSet scores;
    Diagnostics diagnostics;
};

struct RunRecord {
    int index = 0;
    std::uint64_t seed = 0;
    HierarchySpec spec;
    bool failed = false;
    std::string error;
    std::vector<BackendRun> results;  // one per configured backend
};

struct PooledScore {
    int run = 0;
    std::string node;
    double rmspe = 0.0;
};

/// One level's scores pooled over all successful runs.
struct PooledLevel {
    std::vector<PooledScore> scores;
    BoxSummary summary;
    std::vector<PooledScore> outliers;
    std::size_t skipped_points = 0;
    std::size_t undefined_nodes = 0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<RunRecord> runs;
    std::map<std::string, std::array<PooledLevel, 3>> pooled;  // backend -> level

    [[nodiscard]] std::size_t failed_runs() const {
        return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const auto& r) { return r.failed; }));
    }
};

/// Simulated frame holding the pool variables selected by @p spec.
[[nodiscard]] inline SeriesFrame simulate_for_spec(const HierarchySpec& spec, std::int64_t length,
                                                   const ParamRanges& ranges, std::uint64_t seed) {
    return simulate_columns(spec.selected_indices, spec.pool_size, length, ranges, seed);
}

/// One simulated hierarchy scored under every backend.
[[nodiscard]] inline RunRecord run_experiment_once(const ExperimentConfig& config, int index,
                                                   std::uint64_t seed) {
    RunRecord rec;
    rec.index = index;
    rec.seed = seed;
    try {
        rec.spec = sample_hierarchy_spec(config.pool_size, derive_seed(seed, 0));
        const std::uint64_t data_seed = derive_seed(seed, 1);
        // Generating only the selected variables is equivalent to generating
        // the whole pool: each variable has its own seed stream.
        const SeriesFrame frame = config.generator ? config.generator(rec.spec, data_seed)
                                                   : simulate_for_spec(rec.spec, config.length, config.ranges, data_seed);
        const Hierarchy hierarchy = rec.spec.to_hierarchy();
        const LevelSeries levels = aggregate(hierarchy, frame);
        const LevelSeries actual = levels.slice(static_cast<std::size_t>(config.train_length),
                                                static_cast<std::size_t>(config.horizon));
        for (const auto& backend : config.backends) {
            RunConfig rc;
            rc.train_length = config.train_length;
            rc.horizon = config.horizon;
            rc.backend = backend;
            rc.smoothing = config.smoothing;
            rc.seed = seed;
            const auto hf = run_forecast(hierarchy, levels, rc);
            rec.results.push_back({std::string(to_string(backend.kind)), evaluate(hf, actual, config.zero_policy),
                                   hf.diagnostics});
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
        rec.results.clear();
    }
    return rec;
}

/**
 * @brief Repeated simulate / forecast / score over seeded hierarchies.
 *
 * Each run is a pure function of its seed, so runs execute on up to
 * config.jobs threads and the report is identical for any job count.
 * Failed runs are recorded and excluded from the pooled summaries.
 */
[[nodiscard]] inline ExperimentReport experiment(const ExperimentConfig& config) {
    config.validate();
    const auto seeds = config.seeds();
    ExperimentReport report;
    report.config = config;
    report.runs.resize(seeds.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++)
            report.runs[i] = run_experiment_once(config, static_cast<int>(i), seeds[i]);
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(seeds.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    for (std::size_t b = 0; b < config.backends.size(); ++b) {
        const std::string name(to_string(config.backends[b].kind));
        auto& levels = report.pooled[name];
        for (const auto& run : report.runs) {
            if (run.failed) continue;
            for (std::size_t l = 0; l < 3; ++l) {
                const auto& s = run.results[b].scores[l];
                for (const auto& [node, v] : s.rmspe) levels[l].scores.push_back({run.index, node, v});
                for (const auto& [node, k] : s.skipped_points) levels[l].skipped_points += k;
                levels[l].undefined_nodes += s.undefined.size();
            }
        }
        for (auto& pl : levels) {
            std::vector<double> values;
            for (const auto& s : pl.scores) values.push_back(s.rmspe);
            pl.summary = summarize(values);
            for (const auto& s : pl.scores)
                if (pl.summary.is_outlier(s.rmspe)) pl.outliers.push_back(s);
        }
    }
    return report;
}

}  // namespace oddshts
