#pragma once

#include "oddshts/csv.hpp"
#include "oddshts/error.hpp"
#include "oddshts/numeric.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace oddshts {

enum class BackendKind { naive, mean, drift, ar };
enum class OrderSelection { fixed, aic };

[[nodiscard]] inline std::string_view to_string(BackendKind kind) noexcept {
    switch (kind) {
        case BackendKind::naive: return "naive";
        case BackendKind::mean: return "mean";
        case BackendKind::drift: return "drift";
        case BackendKind::ar: return "ar";
    }
    return "?";
}

[[nodiscard]] inline BackendKind parse_backend(std::string_view name) {
    if (name == "naive") return BackendKind::naive;
    if (name == "mean") return BackendKind::mean;
    if (name == "drift") return BackendKind::drift;
    if (name == "ar") return BackendKind::ar;
    throw ParameterError("unknown backend '" + std::string(name) + "' (expected naive|mean|drift|ar)");
}

struct BackendConfig {
    BackendKind kind = BackendKind::ar;
    int p_max = 5;
    int d_max = 1;
    OrderSelection selection = OrderSelection::aic;

    void validate() const {
        if (p_max < 0) throw ParameterError("p_max must be >= 0");
        if (d_max != 0 && d_max != 1) throw ParameterError("d_max must be 0 or 1");
    }
};

struct ForecastVector {
    std::vector<double> values;
    std::ptrdiff_t origin = -1;  // index of the last training point
    std::string backend;
    bool fallback = false;       // ar fit degenerated to the mean model
};

/// Least-squares autoregression on a differenced series.
struct ArFit {
    std::vector<double> coefficients;  // lag 1..p
    double intercept = 0.0;
    double sigma2 = 0.0;
    double aic = 0.0;
    int p = 0;
    int d = 0;
    bool fallback = false;  // singular design, mean model used instead
};

namespace detail {

[[nodiscard]] inline std::vector<double> difference_n(std::span<const double> series, int d) {
    std::vector<double> z(series.begin(), series.end());
    for (int i = 0; i < d; ++i) z = numeric::difference(z);
    return z;
}

[[nodiscard]] inline double aic_of(std::size_t rows, double sigma2, int p) {
    return static_cast<double>(rows) * std::log(sigma2) + 2.0 * (p + 1);
}

/// Mean model over rows [start, n) of z.
[[nodiscard]] inline ArFit mean_fit(std::span<const double> z, std::size_t start, int p) {
    auto rows = z.subspan(start);
    ArFit fit;
    fit.p = p;
    fit.coefficients.assign(static_cast<std::size_t>(p), 0.0);
    fit.intercept = numeric::mean(rows);
    double ss = 0.0;
    for (double v : rows) ss += (v - fit.intercept) * (v - fit.intercept);
    fit.sigma2 = ss / static_cast<double>(rows.size());
    fit.aic = aic_of(rows.size(), fit.sigma2, p);
    return fit;
}

/// Order-p regression of z_t on (1, z_{t-1}, ..., z_{t-p}) for t in [start, n).
[[nodiscard]] inline ArFit regress(std::span<const double> z, int p, std::size_t start) {
    if (p == 0) return mean_fit(z, start, 0);
    const auto m = static_cast<Eigen::Index>(z.size() - start);
    Eigen::MatrixXd design(m, p + 1);
    Eigen::VectorXd target(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t t = start + static_cast<std::size_t>(r);
        design(r, 0) = 1.0;
        for (int lag = 1; lag <= p; ++lag) design(r, lag) = z[t - static_cast<std::size_t>(lag)];
        target(r) = z[t];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < p + 1) {
        ArFit fit = mean_fit(z, start, p);
        fit.fallback = true;
        return fit;
    }
    const Eigen::VectorXd beta = qr.solve(target);
    const Eigen::VectorXd resid = target - design * beta;
    ArFit fit;
    fit.p = p;
    fit.intercept = beta(0);
    fit.coefficients.assign(beta.data() + 1, beta.data() + beta.size());
    fit.sigma2 = resid.squaredNorm() / static_cast<double>(m);
    fit.aic = aic_of(static_cast<std::size_t>(m), fit.sigma2, p);
    return fit;
}

}  // namespace detail

/**
 * @brief Fits an order-p autoregression with intercept to the d-times
 * differenced series by least squares.
 *
 * sigma2 is the mean squared residual; aic = n ln(sigma2) + 2(p + 1) with n
 * the number of regression rows. A rank-deficient design (e.g. a constant
 * series with p > 0) yields the mean model with `fallback` set.
 */
[[nodiscard]] inline ArFit ar_fit(std::span<const double> series, int p, int d) {
    if (p < 0 || d < 0) throw ParameterError("ar orders must be >= 0");
    if (!numeric::all_finite(series)) throw DataError("ar fit: series contains non-finite values");
    const auto z = detail::difference_n(series, d);
    if (z.size() <= static_cast<std::size_t>(p) + 1)
        throw DataError("ar fit: series of length " + std::to_string(series.size()) +
                        " too short for p=" + std::to_string(p) + ", d=" + std::to_string(d));
    ArFit fit = detail::regress(z, p, static_cast<std::size_t>(p));
    fit.d = d;
    return fit;
}

/**
 * @brief Chooses (p, d) for the ar backend.
 *
 * d = 1 when the first difference has smaller sample variance than the level
 * series (capped by d_max). p minimizes AIC over 0..p_max, every candidate
 * fitted on the same rows (those after the first p_max) so the criteria are
 * comparable; ties go to the smaller p.
 */
[[nodiscard]] inline std::pair<int, int> select_order(std::span<const double> series,
                                                      const BackendConfig& config) {
    config.validate();
    if (series.size() < static_cast<std::size_t>(config.p_max + config.d_max + 2))
        throw DataError("order selection: series of length " + std::to_string(series.size()) +
                        " shorter than p_max + d_max + 2");
    if (!numeric::all_finite(series)) throw DataError("order selection: series contains non-finite values");
    int d = 0;
    if (config.d_max >= 1) {
        const auto diff = numeric::difference(series);
        if (numeric::sample_variance(diff) < numeric::sample_variance(series)) d = 1;
    }
    const auto z = detail::difference_n(series, d);
    int best_p = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (int p = 0; p <= config.p_max; ++p) {
        const double aic = detail::regress(z, p, static_cast<std::size_t>(config.p_max)).aic;
        if (p == 0 || aic < best_aic) {
            best_aic = aic;
            best_p = p;
        }
    }
    return {best_p, d};
}

/// Iterated h-step forecasts from a fitted model, integrated back to levels.
[[nodiscard]] inline std::vector<double> ar_predict(const ArFit& fit, std::span<const double> series,
                                                    int horizon) {
    // tails[k] = last value of the k-times differenced series
    std::vector<double> tails;
    std::vector<double> level(series.begin(), series.end());
    for (int k = 0; k < fit.d; ++k) {
        tails.push_back(level.back());
        level = numeric::difference(level);
    }
    std::vector<double> z = std::move(level);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        double next = fit.intercept;
        for (int lag = 1; lag <= fit.p; ++lag)
            next += fit.coefficients[static_cast<std::size_t>(lag - 1)] * z[z.size() - static_cast<std::size_t>(lag)];
        z.push_back(next);
        double value = next;
        for (int k = fit.d - 1; k >= 0; --k) {
            value += tails[static_cast<std::size_t>(k)];
            tails[static_cast<std::size_t>(k)] = value;
        }
        out.push_back(value);
    }
    return out;
}

/**
 * @brief Univariate h-step forecast.
 *
 * naive repeats the last value, mean repeats the training mean, drift follows
 * the line through the first and last points, ar selects (p, d) and iterates
 * the fitted recursion.
 */
[[nodiscard]] inline ForecastVector forecast(std::span<const double> series, int horizon,
                                             const BackendConfig& config) {
    config.validate();
    if (horizon < 1) throw ParameterError("forecast horizon must be >= 1");
    const std::size_t minimum = config.kind == BackendKind::ar ? 3 : 1;
    if (series.size() < minimum)
        throw DataError("forecast: series of length " + std::to_string(series.size()) + " too short for " +
                        std::string(to_string(config.kind)));
    if (!numeric::all_finite(series)) throw DataError("forecast: series contains non-finite values");

    ForecastVector fv;
    fv.origin = static_cast<std::ptrdiff_t>(series.size()) - 1;
    fv.backend = std::string(to_string(config.kind));
    const auto h = static_cast<std::size_t>(horizon);
    switch (config.kind) {
        case BackendKind::naive:
            fv.values.assign(h, series.back());
            break;
        case BackendKind::mean:
            fv.values.assign(h, numeric::mean(series));
            break;
        case BackendKind::drift: {
            const double slope = series.size() < 2 ? 0.0
                                                   : (series.back() - series.front()) /
                                                         static_cast<double>(series.size() - 1);
            fv.values.resize(h);
            for (std::size_t i = 0; i < h; ++i)
                fv.values[i] = series.back() + slope * static_cast<double>(i + 1);
            break;
        }
        case BackendKind::ar: {
            int p = config.p_max;
            int d = config.d_max;
            if (config.selection == OrderSelection::aic) {
                BackendConfig capped = config;
                const int room = static_cast<int>(series.size()) - 2;
                capped.d_max = std::min(config.d_max, std::max(room - 1, 0));
                capped.p_max = std::clamp(room - capped.d_max, 0, config.p_max);
                std::tie(p, d) = select_order(series, capped);
            }
            const ArFit fit = ar_fit(series, p, d);
            fv.fallback = fit.fallback;
            fv.values = ar_predict(fit, series, horizon);
            break;
        }
    }
    if (!numeric::all_finite(fv.values)) throw DataError("forecast produced non-finite values");
    return fv;
}

/// Forecasts supplied from outside (e.g. neural models), keyed by id.
using ExternalForecasts = std::map<std::string, std::vector<double>>;

/**
 * @brief Reads an `id,step,value` CSV with steps 1..h per id.
 *
 * Rejects malformed rows, repeated (id, step) pairs and gaps in the steps.
 * Horizon length is checked later by require_external().
 */
[[nodiscard]] inline ExternalForecasts import_external_forecasts(const std::string& path) {
    const auto lines = csv::read_lines(path);
    const auto header = csv::split(lines.front());
    if (header.size() != 3 || header[0] != "id" || header[1] != "step" || header[2] != "value")
        throw DataError("'" + path + "': expected header 'id,step,value'");
    std::map<std::string, std::map<std::int64_t, double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string ctx = "'" + path + "' line " + std::to_string(i + 1);
        const auto f = csv::split(lines[i]);
        if (f.size() != 3 || f[0].empty()) throw DataError(ctx + ": expected 3 fields");
        const auto step = csv::parse_int(f[1], ctx);
        const double value = csv::parse_double(f[2], ctx);
        if (step < 1) throw DataError(ctx + ": step must be >= 1 for id '" + f[0] + "'");
        if (!std::isfinite(value)) throw DataError(ctx + ": non-finite value for id '" + f[0] + "'");
        if (!rows[f[0]].emplace(step, value).second)
            throw DataError("'" + path + "': duplicate entry for id '" + f[0] + "' step " + std::to_string(step));
    }
    ExternalForecasts out;
    for (auto& [id, steps] : rows) {
        std::vector<double> values;
        std::int64_t expect = 1;
        for (const auto& [step, v] : steps) {
            if (step != expect)
                throw DataError("'" + path + "': id '" + id + "' is missing step " + std::to_string(expect));
            values.push_back(v);
            ++expect;
        }
        out.emplace(id, std::move(values));
    }
    return out;
}

/// The forecast for @p id, checked against @p horizon.
[[nodiscard]] inline const std::vector<double>& require_external(const ExternalForecasts& ext,
                                                                 const std::string& id, int horizon) {
    auto it = ext.find(id);
    if (it == ext.end()) throw DataError("external forecasts have no entry for '" + id + "'");
    if (it->second.size() != static_cast<std::size_t>(horizon))
        throw DataError("external forecast '" + id + "' has " + std::to_string(it->second.size()) +
                        " steps, expected " + std::to_string(horizon));
    return it->second;
}

/// Every entry in @p ext must have exactly @p horizon steps.
inline void check_external_lengths(const ExternalForecasts& ext, int horizon) {
    for (const auto& [id, values] : ext) (void)require_external(ext, id, horizon);
}

}  // namespace oddshts
