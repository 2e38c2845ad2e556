#pragma once

// Odds-based disaggregation of a parent total among sibling series.
//
// For siblings y_1..y_n with total S, the odds of sibling k are
//   odds_k = y_k / sum_{i != k} y_i.
// Rearranging 1 + odds_k = S / (S - y_k) gives one linear equation per sibling,
//   sum_{i != k} y_i = S / (1 + odds_k),
// i.e. (J - I) y = b with J the all-ones matrix. (J - I) is invertible for
// every n >= 2 with inverse J / (n - 1) - I, so the solve is O(n).

#include "oddshts/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace oddshts {

/// Default additive smoothing for odds of sparse count data.
inline constexpr double kDefaultSmoothing = 0.5;

struct OddsVector {
    std::vector<double> values;
    double smoothing = 0.0;
};

/// Right-hand side of the sibling system; the matrix itself is implicit.
struct OddsSystem {
    std::size_t n = 0;
    std::vector<double> rhs;
    double total = 0.0;
};

/**
 * @brief Smoothed odds of sibling @p k against the rest of its group:
 * (v_k + c) / (sum_{i != k} v_i + (n - 1) c).
 *
 * With c = 0 this is the plain odds ratio. Throws UndefinedOddsError when the
 * denominator is zero.
 */
[[nodiscard]] inline double compute_odds(std::span<const double> values, std::size_t k,
                                         double smoothing) {
    const std::size_t n = values.size();
    if (n < 2) throw ParameterError("odds need at least two siblings, got " + std::to_string(n));
    if (k >= n) throw ParameterError("odds index " + std::to_string(k) + " out of range");
    if (!(smoothing >= 0.0) || !std::isfinite(smoothing))
        throw ParameterError("odds smoothing must be finite and >= 0");
    double others = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
            throw ParameterError("odds input must be finite and >= 0 (index " + std::to_string(i) + ")");
        if (i != k) others += values[i];
    }
    const double denom = others + static_cast<double>(n - 1) * smoothing;
    if (denom == 0.0)
        throw UndefinedOddsError("odds undefined: all other siblings are zero (index " +
                                     std::to_string(k) + ")",
                                 {}, 0);
    return (values[k] + smoothing) / denom;
}

/// Odds of every sibling, per time step. All series must share one length.
[[nodiscard]] inline std::map<std::string, std::vector<double>> odds_series(
    const std::map<std::string, std::vector<double>>& siblings, double smoothing) {
    if (siblings.size() < 2)
        throw ParameterError("odds series need at least two siblings");
    const std::size_t len = siblings.begin()->second.size();
    std::vector<std::string> ids;
    std::vector<const std::vector<double>*> cols;
    for (const auto& [id, v] : siblings) {
        if (v.size() != len) throw DataError("sibling series '" + id + "' is misaligned");
        ids.push_back(id);
        cols.push_back(&v);
    }
    std::map<std::string, std::vector<double>> out;
    for (const auto& id : ids) out[id].resize(len);
    std::vector<double> cell(ids.size());
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t k = 0; k < ids.size(); ++k) cell[k] = (*cols[k])[t];
        for (std::size_t k = 0; k < ids.size(); ++k) {
            try {
                out[ids[k]][t] = compute_odds(cell, k, smoothing);
            } catch (const UndefinedOddsError&) {
                throw UndefinedOddsError("odds undefined for '" + ids[k] + "' at t=" + std::to_string(t),
                                         ids[k], t);
            } catch (const ParameterError& e) {
                throw ParameterError(std::string(e.what()) + " for '" + ids[k] + "' at t=" +
                                     std::to_string(t));
            }
        }
    }
    return out;
}

/// b_k = total / (1 + odds_k).
[[nodiscard]] inline OddsSystem build_system(const OddsVector& odds, double total) {
    const std::size_t n = odds.values.size();
    if (n < 2) throw ParameterError("odds system needs at least two siblings");
    if (!std::isfinite(total)) throw ParameterError("odds system total must be finite");
    OddsSystem sys{n, std::vector<double>(n), total};
    for (std::size_t k = 0; k < n; ++k) {
        const double o = odds.values[k];
        if (!(o >= 0.0) || !std::isfinite(o))
            throw ParameterError("odds must be finite and >= 0 (index " + std::to_string(k) + ")");
        sys.rhs[k] = total / (1.0 + o);
    }
    return sys;
}

/// Solves (J - I) y = b via y_k = sum(b) / (n - 1) - b_k. May return negatives.
[[nodiscard]] inline std::vector<double> solve_system(const OddsSystem& system) {
    const std::size_t n = system.rhs.size();
    if (n < 2) throw ParameterError("odds system needs at least two siblings");
    double sum = 0.0;
    for (double b : system.rhs) sum += b;
    const double share = sum / static_cast<double>(n - 1);
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = share - system.rhs[k];
    return y;
}

struct RepairOutcome {
    std::vector<double> values;
    std::size_t clipped = 0;        // negatives set to zero
    bool uniform_fallback = false;  // no positive entry survived
};

/// Clips negatives to zero and rescales the rest to sum to @p total.
[[nodiscard]] inline RepairOutcome repair(std::span<const double> y, double total) {
    if (!(total >= 0.0) || !std::isfinite(total))
        throw ParameterError("repair total must be finite and >= 0, got " + std::to_string(total));
    if (y.empty()) throw ParameterError("repair of an empty vector");
    RepairOutcome out;
    out.values.assign(y.begin(), y.end());
    double positive = 0.0;
    for (auto& v : out.values) {
        if (!std::isfinite(v)) throw ParameterError("repair input must be finite");
        if (v < 0.0) {
            v = 0.0;
            ++out.clipped;
        }
        positive += v;
    }
    if (positive <= 0.0) {
        out.uniform_fallback = true;
        std::fill(out.values.begin(), out.values.end(), total / static_cast<double>(y.size()));
        return out;
    }
    const double scale = total / positive;
    for (auto& v : out.values) v *= scale;
    return out;
}

[[nodiscard]] inline std::vector<double> repair_and_rescale(std::span<const double> y, double total) {
    return repair(y, total).values;
}

/// Build, solve and repair in one step. A single sibling inherits the total.
[[nodiscard]] inline RepairOutcome disaggregate_detailed(double total, const OddsVector& odds) {
    if (odds.values.size() == 1) {
        if (!(total >= 0.0) || !std::isfinite(total))
            throw ParameterError("parent total must be finite and >= 0");
        return {{total}, 0, false};
    }
    const auto raw = solve_system(build_system(odds, total));
    return repair(raw, total);
}

[[nodiscard]] inline std::vector<double> disaggregate(double total, const OddsVector& odds) {
    return disaggregate_detailed(total, odds).values;
}

}  // namespace oddshts
