#pragma once

#include "oddshts/error.hpp"
#include "oddshts/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oddshts {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for stream @p stream of @p root. Depends only on the pair, so
/// work can be generated in any order (or in parallel) with identical output.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

struct InarmaParams {
    double alpha = 0.0;   // AR thinning probability, [0, 1)
    double beta = 0.0;    // MA thinning probability, [0, 1]
    double lambda = 1.0;  // Poisson innovation mean, > 0

    void validate() const {
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw ParameterError("inarma alpha must lie in [0, 1), got " + std::to_string(alpha));
        if (!(beta >= 0.0 && beta <= 1.0))
            throw ParameterError("inarma beta must lie in [0, 1], got " + std::to_string(beta));
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ParameterError("inarma lambda must be > 0, got " + std::to_string(lambda));
    }

    /// lambda (1 + beta) / (1 - alpha)
    [[nodiscard]] double stationary_mean() const noexcept { return lambda * (1.0 + beta) / (1.0 - alpha); }
};

/// p o n: number of successes among n Bernoulli(p) trials.
template <class URBG>
[[nodiscard]] std::int64_t binomial_thinning(std::int64_t n, double p, URBG& rng) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

inline constexpr int kDefaultBurnIn = 100;

/**
 * @brief INARMA(1,1) with Poisson innovations:
 *   X_t = alpha o X_{t-1} + e_t + beta o e_{t-1},  e_t ~ Poisson(lambda),
 * started at X_0 = e_0. The first @p burn_in values are discarded.
 */
[[nodiscard]] inline std::vector<std::int64_t> inarma_generate(const InarmaParams& params,
                                                               std::int64_t length, std::uint64_t seed,
                                                               int burn_in = kDefaultBurnIn) {
    params.validate();
    if (length < 1) throw ParameterError("inarma length must be >= 1");
    if (burn_in < 0) throw ParameterError("inarma burn-in must be >= 0");
    Engine rng(seed);
    std::poisson_distribution<std::int64_t> innovation(params.lambda);

    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(length));
    const std::int64_t total = length + burn_in;
    std::int64_t prev_eps = innovation(rng);
    std::int64_t x = prev_eps;
    if (burn_in == 0) out.push_back(x);
    for (std::int64_t t = 1; t < total; ++t) {
        const std::int64_t eps = innovation(rng);
        x = binomial_thinning(x, params.alpha, rng) + eps + binomial_thinning(prev_eps, params.beta, rng);
        prev_eps = eps;
        if (t >= burn_in) out.push_back(x);
    }
    return out;
}

struct Range {
    double low = 0.0;
    double high = 0.0;
};

/// Per-variable parameter ranges; each variable draws alpha, beta, lambda
/// uniformly and independently.
struct ParamRanges {
    Range alpha{0.1, 0.7};
    Range beta{0.0, 0.5};
    Range lambda{1.0, 10.0};
    int burn_in = kDefaultBurnIn;

    void validate() const {
        auto check = [](const Range& r, const char* name) {
            if (!std::isfinite(r.low) || !std::isfinite(r.high) || r.low > r.high)
                throw ParameterError(std::string("invalid ") + name + " range [" + std::to_string(r.low) +
                                     ", " + std::to_string(r.high) + "]");
        };
        check(alpha, "alpha");
        check(beta, "beta");
        check(lambda, "lambda");
        if (alpha.low < 0.0 || alpha.high >= 1.0) throw ParameterError("alpha range must lie in [0, 1)");
        if (beta.low < 0.0 || beta.high > 1.0) throw ParameterError("beta range must lie in [0, 1]");
        if (lambda.low <= 0.0) throw ParameterError("lambda range must be > 0");
        if (burn_in < 0) throw ParameterError("burn-in must be >= 0");
    }

    template <class URBG>
    [[nodiscard]] InarmaParams draw(URBG& rng) const {
        auto u = [&rng](const Range& r) {
            return r.low == r.high ? r.low : std::uniform_real_distribution<double>(r.low, r.high)(rng);
        };
        InarmaParams p;
        p.alpha = u(alpha);
        p.beta = u(beta);
        p.lambda = u(lambda);
        return p;
    }
};

/// "v0001" style id of pool variable @p index (1-based).
[[nodiscard]] inline std::string variable_id(std::int64_t index, std::int64_t pool_size) {
    int width = 4;
    for (std::int64_t n = pool_size; n >= 10000; n /= 10) ++width;
    std::string digits = std::to_string(index);
    if (digits.size() < static_cast<std::size_t>(width))
        digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return "v" + digits;
}

/// Parameters and counts of pool variable @p index (1-based) under root @p seed.
[[nodiscard]] inline std::vector<std::int64_t> simulate_variable(std::int64_t index, std::int64_t length,
                                                                 const ParamRanges& ranges,
                                                                 std::uint64_t seed,
                                                                 InarmaParams* drawn = nullptr) {
    const std::uint64_t var_seed = derive_seed(seed, static_cast<std::uint64_t>(index));
    Engine param_rng(derive_seed(var_seed, 0));
    const InarmaParams params = ranges.draw(param_rng);
    if (drawn) *drawn = params;
    return inarma_generate(params, length, derive_seed(var_seed, 1), ranges.burn_in);
}

/// Columns for the given pool indices (1-based).
[[nodiscard]] inline SeriesFrame simulate_columns(const std::vector<std::int64_t>& indices,
                                                  std::int64_t pool_size, std::int64_t length,
                                                  const ParamRanges& ranges, std::uint64_t seed) {
    ranges.validate();
    if (length < 1) throw ParameterError("simulation length must be >= 1");
    std::vector<std::string> ids;
    std::vector<std::vector<double>> cols;
    ids.reserve(indices.size());
    cols.reserve(indices.size());
    for (auto index : indices) {
        if (index < 1 || index > pool_size) throw ParameterError("variable index outside the pool");
        auto counts = simulate_variable(index, length, ranges, seed);
        ids.push_back(variable_id(index, pool_size));
        cols.emplace_back(counts.begin(), counts.end());
    }
    return SeriesFrame(std::move(ids), std::move(cols));
}

/// Full pool of @p n_vars independent INARMA(1,1) series, ids v0001..vNNNN.
[[nodiscard]] inline SeriesFrame simulate_dataset(std::int64_t n_vars, std::int64_t length,
                                                  const ParamRanges& ranges, std::uint64_t seed) {
    if (n_vars < 1) throw ParameterError("simulation needs at least one variable");
    std::vector<std::int64_t> indices(static_cast<std::size_t>(n_vars));
    std::iota(indices.begin(), indices.end(), std::int64_t{1});
    return simulate_columns(indices, n_vars, length, ranges, seed);
}

inline constexpr int kMidCount = 6;
inline constexpr int kMaxChildren = 9;
inline constexpr std::int64_t kMinPoolSize = kMidCount * kMaxChildren;

/// Random hierarchy layout: child counts per mid and the pool variables used.
struct HierarchySpec {
    std::vector<int> mid_child_counts;
    std::vector<std::string> selected_ids;
    std::vector<std::int64_t> selected_indices;  // 1-based pool positions
    std::int64_t pool_size = 0;

    [[nodiscard]] int total_children() const {
        return std::accumulate(mid_child_counts.begin(), mid_child_counts.end(), 0);
    }

    /// Mids "M1".."M6", children assigned in selection order.
    [[nodiscard]] Hierarchy to_hierarchy() const {
        std::vector<MidNode> mids;
        std::size_t next = 0;
        for (std::size_t i = 0; i < mid_child_counts.size(); ++i) {
            MidNode mid{"M" + std::to_string(i + 1), {}};
            for (int c = 0; c < mid_child_counts[i]; ++c) mid.children.push_back(selected_ids.at(next++));
            mids.push_back(std::move(mid));
        }
        return Hierarchy(std::move(mids));
    }
};

/// Six counts uniform on 1..9, then N = their sum distinct pool variables
/// drawn without replacement.
[[nodiscard]] inline HierarchySpec sample_hierarchy_spec(std::int64_t pool_size, std::uint64_t seed) {
    if (pool_size < kMinPoolSize)
        throw ParameterError("pool size must be >= " + std::to_string(kMinPoolSize) + ", got " +
                             std::to_string(pool_size));
    Engine rng(seed);
    std::uniform_int_distribution<int> count(1, kMaxChildren);
    HierarchySpec spec;
    spec.pool_size = pool_size;
    for (int i = 0; i < kMidCount; ++i) spec.mid_child_counts.push_back(count(rng));

    std::vector<std::int64_t> pool(static_cast<std::size_t>(pool_size));
    std::iota(pool.begin(), pool.end(), std::int64_t{1});
    const auto n = static_cast<std::size_t>(spec.total_children());
    // Partial Fisher-Yates keeps the draw order random, not pool-sorted.
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    spec.selected_indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    for (auto idx : spec.selected_indices) spec.selected_ids.push_back(variable_id(idx, pool_size));
    return spec;
}

}  // namespace oddshts
