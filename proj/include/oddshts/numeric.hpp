#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace oddshts::numeric {

/// Mean computed around the first element, so a constant input returns
/// that constant bit-for-bit.
[[nodiscard]] inline double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean of empty range");
    const double pivot = x.front();
    double acc = 0.0;
    for (double v : x) acc += v - pivot;
    return pivot + acc / static_cast<double>(x.size());
}

/// Unbiased sample variance; zero for fewer than two points.
[[nodiscard]] inline double sample_variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

[[nodiscard]] inline std::vector<double> difference(std::span<const double> x) {
    std::vector<double> out;
    if (x.size() < 2) return out;
    out.reserve(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) out.push_back(x[i] - x[i - 1]);
    return out;
}

[[nodiscard]] inline bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace oddshts::numeric
