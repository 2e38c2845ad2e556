#pragma once

#include "oddshts/error.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace oddshts {

/// Default absolute tolerance for the summation identities.
inline constexpr double kSumTolerance = 1e-9;

struct MidNode {
    std::string id;
    std::vector<std::string> children;
};

/**
 * @brief Three-level tree: one implicit root, ordered mid nodes, and a
 * disjoint cover of bottom series ids.
 *
 * Construction enforces the structural invariants; a Hierarchy that exists
 * is always well formed.
 */
class Hierarchy {
public:
    explicit Hierarchy(std::vector<MidNode> mids) : mids_(std::move(mids)) {
        if (mids_.empty()) throw StructuralError("hierarchy has no mid nodes");
        std::set<std::string> seen;
        for (const auto& mid : mids_) {
            if (mid.id.empty()) throw StructuralError("mid node with empty id");
            if (!seen.insert(mid.id).second)
                throw StructuralError("duplicate node id '" + mid.id + "'");
            if (mid.children.empty())
                throw StructuralError("mid node '" + mid.id + "' has no children");
            for (const auto& child : mid.children) {
                if (child.empty())
                    throw StructuralError("mid node '" + mid.id + "' has a child with empty id");
                if (!seen.insert(child).second)
                    throw StructuralError("duplicate node id '" + child + "'");
                parent_of_.emplace(child, mid.id);
            }
        }
    }

    [[nodiscard]] const std::vector<MidNode>& mids() const noexcept { return mids_; }
    [[nodiscard]] std::size_t mid_count() const noexcept { return mids_.size(); }

    [[nodiscard]] std::vector<std::string> bottom_ids() const {
        std::vector<std::string> ids;
        for (const auto& mid : mids_)
            ids.insert(ids.end(), mid.children.begin(), mid.children.end());
        return ids;
    }

    [[nodiscard]] const MidNode& mid(std::string_view id) const {
        for (const auto& m : mids_)
            if (m.id == id) return m;
        throw StructuralError("unknown mid node '" + std::string(id) + "'");
    }

    /// Parent mid id of a bottom series, or empty if the id is not a bottom node.
    [[nodiscard]] std::string parent_of(const std::string& bottom_id) const {
        auto it = parent_of_.find(bottom_id);
        return it == parent_of_.end() ? std::string{} : it->second;
    }

private:
    std::vector<MidNode> mids_;
    std::unordered_map<std::string, std::string> parent_of_;
};

/**
 * @brief Aligned, time-indexed matrix of series values, one column per id.
 */
class SeriesFrame {
public:
    SeriesFrame() = default;

    SeriesFrame(std::vector<std::int64_t> timestamps, std::vector<std::string> ids,
                std::vector<std::vector<double>> columns)
        : timestamps_(std::move(timestamps)), ids_(std::move(ids)), columns_(std::move(columns)) {
        if (ids_.size() != columns_.size())
            throw StructuralError("series frame: id count does not match column count");
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            if (columns_[i].size() != timestamps_.size())
                throw StructuralError("series frame: column '" + ids_[i] +
                                      "' length differs from the time index");
            if (!index_.emplace(ids_[i], i).second)
                throw StructuralError("series frame: duplicate column id '" + ids_[i] + "'");
        }
    }

    /// Frame indexed 0..T-1.
    SeriesFrame(std::vector<std::string> ids, std::vector<std::vector<double>> columns)
        : SeriesFrame(default_index(columns), std::move(ids), std::move(columns), Indexed{}) {}

    [[nodiscard]] std::size_t length() const noexcept { return timestamps_.size(); }
    [[nodiscard]] std::size_t width() const noexcept { return ids_.size(); }
    [[nodiscard]] bool empty() const noexcept { return ids_.empty() || timestamps_.empty(); }
    [[nodiscard]] const std::vector<std::int64_t>& timestamps() const noexcept { return timestamps_; }
    [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }
    [[nodiscard]] bool contains(const std::string& id) const { return index_.contains(id); }

    [[nodiscard]] std::span<const double> column(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw StructuralError("series frame has no column '" + id + "'");
        return columns_[it->second];
    }
    [[nodiscard]] std::span<const double> column(std::size_t i) const { return columns_.at(i); }

private:
    struct Indexed {};

    // `columns` binds by reference here, so default_index() in the public
    // constructor always sees it before the move.
    SeriesFrame(std::vector<std::int64_t> timestamps, std::vector<std::string> ids,
                std::vector<std::vector<double>>&& columns, Indexed)
        : SeriesFrame(std::move(timestamps), std::move(ids), std::vector<std::vector<double>>(std::move(columns))) {}

    static std::vector<std::int64_t> default_index(const std::vector<std::vector<double>>& cols) {
        std::vector<std::int64_t> t(cols.empty() ? 0 : cols.front().size());
        std::iota(t.begin(), t.end(), std::int64_t{0});
        return t;
    }

    std::vector<std::int64_t> timestamps_;
    std::vector<std::string> ids_;
    std::vector<std::vector<double>> columns_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Top, mid and bottom series of one hierarchy over a common time index.
struct LevelSeries {
    std::vector<double> top;
    std::map<std::string, std::vector<double>> mid;
    std::map<std::string, std::vector<double>> bottom;

    [[nodiscard]] std::size_t length() const noexcept { return top.size(); }

    /// Window [begin, begin + count) of every series.
    [[nodiscard]] LevelSeries slice(std::size_t begin, std::size_t count) const {
        if (begin + count > length()) throw DataError("level series slice out of range");
        auto cut = [&](const std::vector<double>& v) {
            return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin),
                                       v.begin() + static_cast<std::ptrdiff_t>(begin + count));
        };
        LevelSeries out;
        out.top = cut(top);
        for (const auto& [id, v] : mid) out.mid.emplace(id, cut(v));
        for (const auto& [id, v] : bottom) out.bottom.emplace(id, cut(v));
        return out;
    }
};

/// Builds mid and top series from bottom columns. Children are summed in
/// hierarchy order, mids likewise, so the result is reproducible bit-for-bit.
[[nodiscard]] inline LevelSeries aggregate(const Hierarchy& hierarchy, const SeriesFrame& bottom) {
    if (bottom.empty()) throw StructuralError("cannot aggregate an empty series frame");
    const std::size_t n = bottom.length();
    LevelSeries out;
    out.top.assign(n, 0.0);
    for (const auto& mid : hierarchy.mids()) {
        std::vector<double> sum(n, 0.0);
        for (const auto& child : mid.children) {
            if (!bottom.contains(child))
                throw StructuralError("series frame is missing bottom series '" + child + "'");
            auto col = bottom.column(child);
            for (std::size_t t = 0; t < n; ++t) sum[t] += col[t];
            out.bottom.emplace(child, std::vector<double>(col.begin(), col.end()));
        }
        for (std::size_t t = 0; t < n; ++t) out.top[t] += sum[t];
        out.mid.emplace(mid.id, std::move(sum));
    }
    return out;
}

enum class Level { top, mid, bottom };

[[nodiscard]] inline std::string_view to_string(Level level) noexcept {
    switch (level) {
        case Level::top: return "top";
        case Level::mid: return "mid";
        case Level::bottom: return "bottom";
    }
    return "?";
}

struct Violation {
    Level level;
    std::string node;  // "TOP" for the root
    std::size_t t;
    double expected;   // sum over descendants
    double actual;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<std::string> structural;  // missing series, length mismatches

    [[nodiscard]] bool ok() const noexcept { return violations.empty() && structural.empty(); }
};

/**
 * @brief Lists every (level, node, t) where a summation identity fails.
 *
 * Each mid is checked against the sum of its children; the top is checked
 * against the sum of all bottom series. Checking both against the bottom
 * level attributes a perturbed node to its own level only, and the identity
 * top = sum of mids then holds within twice the tolerance.
 */
[[nodiscard]] inline ValidationReport validate(const Hierarchy& hierarchy, const LevelSeries& levels,
                                               double tolerance = kSumTolerance) {
    ValidationReport report;
    const std::size_t n = levels.top.size();
    bool complete = true;
    for (const auto& mid : hierarchy.mids()) {
        auto mit = levels.mid.find(mid.id);
        if (mit == levels.mid.end() || mit->second.size() != n) {
            report.structural.push_back("mid series '" + mid.id + "' missing or misaligned");
            complete = false;
            continue;
        }
        for (const auto& child : mid.children) {
            auto bit = levels.bottom.find(child);
            if (bit == levels.bottom.end() || bit->second.size() != n) {
                report.structural.push_back("bottom series '" + child + "' missing or misaligned");
                complete = false;
            }
        }
    }
    if (!complete) return report;

    std::vector<double> total(n, 0.0);
    for (const auto& mid : hierarchy.mids()) {
        const auto& y = levels.mid.at(mid.id);
        for (std::size_t t = 0; t < n; ++t) {
            double sum = 0.0;
            for (const auto& child : mid.children) sum += levels.bottom.at(child)[t];
            total[t] += sum;
            if (!(std::abs(y[t] - sum) <= tolerance))
                report.violations.push_back({Level::mid, mid.id, t, sum, y[t]});
        }
    }
    for (std::size_t t = 0; t < n; ++t)
        if (!(std::abs(levels.top[t] - total[t]) <= tolerance))
            report.violations.push_back({Level::top, "TOP", t, total[t], levels.top[t]});
    return report;
}

}  // namespace oddshts
