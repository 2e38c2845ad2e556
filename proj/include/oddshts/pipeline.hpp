#pragma once

#include "oddshts/error.hpp"
#include "oddshts/forecast.hpp"
#include "oddshts/hierarchy.hpp"
#include "oddshts/odds.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oddshts {

/// Id under which the root series is forecast and imported.
inline constexpr const char* kTopId = "TOP";

inline constexpr double kForecastTolerance = 1e-6;

struct RunConfig {
    int train_length = 970;
    int horizon = 30;
    BackendConfig backend;
    double smoothing = kDefaultSmoothing;
    std::uint64_t seed = 0;
    std::optional<std::string> external_path;

    void validate() const {
        if (train_length < 1) throw ParameterError("train_length must be >= 1");
        if (horizon < 1) throw ParameterError("horizon must be >= 1");
        if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) throw ParameterError("smoothing must be >= 0");
        backend.validate();
    }
};

struct Diagnostics {
    std::size_t repaired_negatives = 0;     // reconciled entries clipped to zero
    std::size_t repaired_solutions = 0;     // systems with at least one negative
    std::size_t max_negatives_in_solution = 0;
    std::size_t uniform_fallbacks = 0;      // systems with no positive entry
    std::size_t clamped_odds = 0;           // negative forecast odds set to zero
    std::size_t clamped_totals = 0;         // negative top forecasts set to zero
    std::size_t undefined_odds_fallbacks = 0;
    std::size_t ar_fallbacks = 0;
    std::size_t external_series = 0;
    double smoothing = 0.0;
};

struct HierForecast {
    ForecastVector top;
    std::map<std::string, ForecastVector> mid;
    std::map<std::string, ForecastVector> bottom;
    Diagnostics diagnostics;

    /// Forecasts as a LevelSeries over the horizon, for validate().
    [[nodiscard]] LevelSeries as_levels() const {
        LevelSeries out;
        out.top = top.values;
        for (const auto& [id, f] : mid) out.mid.emplace(id, f.values);
        for (const auto& [id, f] : bottom) out.bottom.emplace(id, f.values);
        return out;
    }
};

/// Which series a forecast request is for.
struct SeriesRef {
    enum class Kind { total, odds };
    Kind kind = Kind::total;
    std::string id;      // kTopId for the root total, else the node whose odds are forecast
    std::string parent;  // parent of an odds series
};

/// Replaces the backend for individual series. Receives the training window.
using ForecastProvider =
    std::function<ForecastVector(const SeriesRef&, std::span<const double> training, int horizon)>;

namespace detail {

template <class Fn>
auto with_context(const std::string& context, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StructuralError& e) {
        throw StructuralError(context + ": " + e.what());
    } catch (const ParameterError& e) {
        throw ParameterError(context + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(context + ": " + e.what());
    }
}

/// Odds of each sibling over the training window. Cells whose odds are
/// undefined (no smoothing, all other siblings zero) fall back to the
/// default smoothing constant.
inline std::vector<std::vector<double>> training_odds(const std::vector<const std::vector<double>*>& siblings,
                                                      std::size_t length, double smoothing,
                                                      Diagnostics& diag) {
    const std::size_t n = siblings.size();
    std::vector<std::vector<double>> odds(n, std::vector<double>(length));
    std::vector<double> cell(n);
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t k = 0; k < n; ++k) cell[k] = (*siblings[k])[t];
        for (std::size_t k = 0; k < n; ++k) {
            try {
                odds[k][t] = compute_odds(cell, k, smoothing);
            } catch (const UndefinedOddsError&) {
                odds[k][t] = compute_odds(cell, k, kDefaultSmoothing);
                ++diag.undefined_odds_fallbacks;
            }
        }
    }
    return odds;
}

inline void record(Diagnostics& diag, const RepairOutcome& r) {
    diag.repaired_negatives += r.clipped;
    if (r.clipped > 0) ++diag.repaired_solutions;
    if (r.clipped > diag.max_negatives_in_solution) diag.max_negatives_in_solution = r.clipped;
    if (r.uniform_fallback) ++diag.uniform_fallbacks;
}

inline ForecastVector checked(ForecastVector fv, const std::string& id, int horizon) {
    if (fv.values.size() != static_cast<std::size_t>(horizon))
        throw DataError("forecast for '" + id + "' has " + std::to_string(fv.values.size()) +
                        " steps, expected " + std::to_string(horizon));
    if (!numeric::all_finite(fv.values)) throw DataError("forecast for '" + id + "' is not finite");
    return fv;
}

/// Splits each step of @p parent among @p children through forecast odds.
inline std::vector<ForecastVector> split_parent(const std::string& parent_id, const std::vector<double>& parent,
                                                const std::vector<std::string>& children,
                                                const std::vector<const std::vector<double>*>& history,
                                                const RunConfig& config, const ForecastProvider& provider,
                                                const std::string& tag, Diagnostics& diag) {
    const auto h = static_cast<std::size_t>(config.horizon);
    const auto origin = static_cast<std::ptrdiff_t>(config.train_length) - 1;
    std::vector<ForecastVector> out(children.size());
    if (children.size() == 1) {
        out[0] = {parent, origin, tag, false};
        return out;
    }
    const auto odds = training_odds(history, static_cast<std::size_t>(config.train_length), config.smoothing, diag);
    std::vector<std::vector<double>> future(children.size());
    for (std::size_t k = 0; k < children.size(); ++k) {
        SeriesRef ref{SeriesRef::Kind::odds, children[k], parent_id};
        auto fv = with_context("odds of '" + children[k] + "'", [&] {
            return checked(provider(ref, odds[k], config.horizon), children[k], config.horizon);
        });
        if (fv.fallback) ++diag.ar_fallbacks;
        for (auto& v : fv.values) {
            if (v < 0.0) {
                v = 0.0;
                ++diag.clamped_odds;
            }
        }
        future[k] = std::move(fv.values);
    }
    for (auto& f : out) {
        f.values.resize(h);
        f.origin = origin;
        f.backend = tag;
    }
    OddsVector step{std::vector<double>(children.size()), config.smoothing};
    for (std::size_t s = 0; s < h; ++s) {
        for (std::size_t k = 0; k < children.size(); ++k) step.values[k] = future[k][s];
        const auto r = disaggregate_detailed(parent[s], step);
        record(diag, r);
        for (std::size_t k = 0; k < children.size(); ++k) out[k].values[s] = r.values[k];
    }
    return out;
}

}  // namespace detail

/// The configured backend applied to every series.
[[nodiscard]] inline ForecastProvider backend_provider(const BackendConfig& backend) {
    return [backend](const SeriesRef&, std::span<const double> training, int horizon) {
        return forecast(training, horizon, backend);
    };
}

/**
 * @brief Top-down hierarchical forecast from one origin.
 *
 * The top series is forecast on the training window; each mid's share of
 * every forecast step comes from forecast mid-level odds, and each bottom's
 * share of its (reconciled) mid from forecast within-mid odds. Reconciled
 * values are nonnegative and sum to their parent at every step.
 *
 * @p provider replaces the backend for any series it is called with; by
 * default every series uses config.backend.
 */
[[nodiscard]] inline HierForecast run_forecast(const Hierarchy& hierarchy, const LevelSeries& levels,
                                               const RunConfig& config, ForecastProvider provider = {}) {
    config.validate();
    const auto report = validate(hierarchy, levels);
    if (!report.ok()) {
        std::string what = "input levels are inconsistent";
        if (!report.structural.empty()) what += ": " + report.structural.front();
        else {
            const auto& v = report.violations.front();
            what += ": " + std::string(to_string(v.level)) + " '" + v.node + "' at t=" + std::to_string(v.t);
        }
        throw StructuralError(what);
    }
    if (static_cast<std::size_t>(config.train_length) > levels.length())
        throw DataError("train_length " + std::to_string(config.train_length) + " exceeds series length " +
                        std::to_string(levels.length()));
    if (!provider) provider = backend_provider(config.backend);
    const std::string tag(to_string(config.backend.kind));

    HierForecast out;
    out.diagnostics.smoothing = config.smoothing;
    const auto train = static_cast<std::size_t>(config.train_length);

    const std::span<const double> top_train(levels.top.data(), train);
    out.top = detail::with_context(std::string("series '") + kTopId + "'", [&] {
        return detail::checked(provider({SeriesRef::Kind::total, kTopId, {}}, top_train, config.horizon), kTopId,
                               config.horizon);
    });
    if (out.top.fallback) ++out.diagnostics.ar_fallbacks;
    for (auto& v : out.top.values) {
        if (v < 0.0) {
            v = 0.0;
            ++out.diagnostics.clamped_totals;
        }
    }

    std::vector<std::string> mid_ids;
    std::vector<const std::vector<double>*> mid_history;
    for (const auto& mid : hierarchy.mids()) {
        mid_ids.push_back(mid.id);
        mid_history.push_back(&levels.mid.at(mid.id));
    }
    auto mids = detail::split_parent(kTopId, out.top.values, mid_ids, mid_history, config, provider, tag,
                                     out.diagnostics);

    for (std::size_t i = 0; i < mid_ids.size(); ++i) {
        const auto& node = hierarchy.mids()[i];
        std::vector<const std::vector<double>*> history;
        for (const auto& child : node.children) history.push_back(&levels.bottom.at(child));
        auto bottoms = detail::split_parent(node.id, mids[i].values, node.children, history, config, provider,
                                            tag, out.diagnostics);
        for (std::size_t k = 0; k < node.children.size(); ++k)
            out.bottom.emplace(node.children[k], std::move(bottoms[k]));
        out.mid.emplace(node.id, std::move(mids[i]));
    }
    return out;
}

enum class ExternalMode {
    supplement,  // external forecasts override the backend where present
    exclusive    // every series must come from the external set
};

/// run_forecast with externally produced forecasts substituted by id:
/// kTopId for the root total, a node id for that node's odds.
[[nodiscard]] inline HierForecast run_with_external(const Hierarchy& hierarchy, const LevelSeries& levels,
                                                    const RunConfig& config, const ExternalForecasts& external,
                                                    ExternalMode mode = ExternalMode::supplement) {
    config.validate();
    check_external_lengths(external, config.horizon);
    for (const auto& [id, values] : external) {
        if (id == kTopId) continue;
        const bool known = levels.mid.contains(id) || levels.bottom.contains(id);
        if (!known) throw DataError("external forecast '" + id + "' matches no node in the hierarchy");
    }
    auto fallback = backend_provider(config.backend);
    std::size_t used = 0;
    ForecastProvider provider = [&](const SeriesRef& ref, std::span<const double> training, int horizon) {
        if (mode == ExternalMode::exclusive || external.contains(ref.id)) {
            ++used;
            return ForecastVector{require_external(external, ref.id, horizon),
                                  static_cast<std::ptrdiff_t>(training.size()) - 1, "external", false};
        }
        return fallback(ref, training, horizon);
    };
    auto out = run_forecast(hierarchy, levels, config, provider);
    out.diagnostics.external_series = used;
    return out;
}

}  // namespace oddshts
