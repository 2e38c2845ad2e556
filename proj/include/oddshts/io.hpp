#pragma once

// File formats:
//   series CSV     t,<id>,<id>,...          one row per time step
//   hierarchy JSON {"mids": [{"id": "...", "children": ["...", ...]}, ...]}
//   levels CSV     level,id,step,value       step 1..h; used for forecasts and actuals
//   external CSV   id,step,value             see import_external_forecasts()

#include "oddshts/csv.hpp"
#include "oddshts/error.hpp"
#include "oddshts/eval.hpp"
#include "oddshts/forecast.hpp"
#include "oddshts/hierarchy.hpp"
#include "oddshts/pipeline.hpp"
#include "oddshts/simulate.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace oddshts::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// plain files

[[nodiscard]] inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("error writing '" + path + "'");
}

[[nodiscard]] inline json read_json(const std::string& path) {
    const auto text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// series frame

[[nodiscard]] inline SeriesFrame parse_series_csv(const std::vector<std::string>& lines, const std::string& path) {
    const auto header = csv::split(lines.front());
    if (header.empty() || header[0] != "t") throw DataError("'" + path + "': first column must be 't'");
    if (header.size() < 2) throw StructuralError("'" + path + "': no series columns");
    std::vector<std::string> ids(header.begin() + 1, header.end());
    std::vector<std::vector<double>> cols(ids.size());
    std::vector<std::int64_t> t;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string ctx = "'" + path + "' line " + std::to_string(i + 1);
        const auto f = csv::split(lines[i]);
        if (f.size() != header.size())
            throw DataError(ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(f.size()));
        t.push_back(csv::parse_int(f[0], ctx));
        for (std::size_t c = 0; c < ids.size(); ++c) {
            const double v = csv::parse_double(f[c + 1], ctx);
            if (!std::isfinite(v)) throw DataError(ctx + ": non-finite value in column '" + ids[c] + "'");
            cols[c].push_back(v);
        }
    }
    if (t.empty()) throw StructuralError("'" + path + "': series frame has no rows");
    return SeriesFrame(std::move(t), std::move(ids), std::move(cols));
}

[[nodiscard]] inline SeriesFrame read_series_csv(const std::string& path) {
    return parse_series_csv(csv::read_lines(path), path);
}

inline void write_series_csv(const std::string& path, const SeriesFrame& frame) {
    std::string out = "t";
    for (const auto& id : frame.ids()) out += "," + id;
    out += "\n";
    for (std::size_t r = 0; r < frame.length(); ++r) {
        out += std::to_string(frame.timestamps()[r]);
        for (std::size_t c = 0; c < frame.width(); ++c) out += "," + csv::format_double(frame.column(c)[r]);
        out += "\n";
    }
    write_text(path, out);
}

// ---------------------------------------------------------------------------
// hierarchy

[[nodiscard]] inline json to_json(const Hierarchy& h) {
    json mids = json::array();
    for (const auto& m : h.mids()) mids.push_back({{"id", m.id}, {"children", m.children}});
    return {{"mids", mids}};
}

[[nodiscard]] inline Hierarchy hierarchy_from_json(const json& j, const std::string& source) {
    try {
        std::vector<MidNode> mids;
        for (const auto& m : j.at("mids"))
            mids.push_back({m.at("id").get<std::string>(), m.at("children").get<std::vector<std::string>>()});
        return Hierarchy(std::move(mids));
    } catch (const json::exception& e) {
        throw DataError("'" + source + "': malformed hierarchy: " + e.what());
    } catch (const StructuralError& e) {
        throw StructuralError("'" + source + "': " + e.what());
    }
}

[[nodiscard]] inline Hierarchy read_hierarchy(const std::string& path) {
    return hierarchy_from_json(read_json(path), path);
}

/// Hierarchy JSON plus the sampled layout that produced it.
[[nodiscard]] inline json to_json(const HierarchySpec& spec) {
    json j = to_json(spec.to_hierarchy());
    j["mid_child_counts"] = spec.mid_child_counts;
    j["selected_ids"] = spec.selected_ids;
    j["pool_size"] = spec.pool_size;
    return j;
}

// ---------------------------------------------------------------------------
// levels (forecasts and actuals)

inline void write_levels_csv(const std::string& path, const LevelSeries& levels) {
    std::string out = "level,id,step,value\n";
    auto emit = [&out](std::string_view level, const std::string& id, const std::vector<double>& v) {
        for (std::size_t s = 0; s < v.size(); ++s)
            out += std::string(level) + "," + id + "," + std::to_string(s + 1) + "," + csv::format_double(v[s]) + "\n";
    };
    emit("top", kTopId, levels.top);
    for (const auto& [id, v] : levels.mid) emit("mid", id, v);
    for (const auto& [id, v] : levels.bottom) emit("bottom", id, v);
    write_text(path, out);
}

[[nodiscard]] inline LevelSeries read_levels_csv(const std::string& path) {
    const auto lines = csv::read_lines(path);
    const auto header = csv::split(lines.front());
    if (header != std::vector<std::string>{"level", "id", "step", "value"})
        throw DataError("'" + path + "': expected header 'level,id,step,value'");
    std::map<std::pair<std::string, std::string>, std::map<std::int64_t, double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string ctx = "'" + path + "' line " + std::to_string(i + 1);
        const auto f = csv::split(lines[i]);
        if (f.size() != 4) throw DataError(ctx + ": expected 4 fields");
        if (f[0] != "top" && f[0] != "mid" && f[0] != "bottom") throw DataError(ctx + ": unknown level '" + f[0] + "'");
        const auto step = csv::parse_int(f[2], ctx);
        if (!rows[{f[0], f[1]}].emplace(step, csv::parse_double(f[3], ctx)).second)
            throw DataError(ctx + ": duplicate step " + std::to_string(step) + " for '" + f[1] + "'");
    }
    LevelSeries out;
    std::size_t horizon = 0;
    bool have_top = false;
    for (const auto& [key, steps] : rows) {
        const auto& [level, id] = key;
        std::vector<double> v;
        std::int64_t expect = 1;
        for (const auto& [step, value] : steps) {
            if (step != expect) throw DataError("'" + path + "': '" + id + "' is missing step " + std::to_string(expect));
            v.push_back(value);
            ++expect;
        }
        if (horizon == 0) horizon = v.size();
        if (v.size() != horizon) throw DataError("'" + path + "': '" + id + "' has a different number of steps");
        if (level == "top") {
            if (have_top) throw DataError("'" + path + "': more than one top series");
            out.top = std::move(v);
            have_top = true;
        } else if (level == "mid") {
            out.mid.emplace(id, std::move(v));
        } else {
            out.bottom.emplace(id, std::move(v));
        }
    }
    if (!have_top) throw DataError("'" + path + "': no top series");
    return out;
}

// ---------------------------------------------------------------------------
// configuration

[[nodiscard]] inline BackendConfig backend_from_json(const json& j) {
    BackendConfig b;
    if (j.is_string()) {
        b.kind = parse_backend(j.get<std::string>());
        return b;
    }
    b.kind = parse_backend(j.value("kind", std::string("ar")));
    b.p_max = j.value("p_max", b.p_max);
    b.d_max = j.value("d_max", b.d_max);
    const auto sel = j.value("selection", std::string("aic"));
    if (sel == "aic") b.selection = OrderSelection::aic;
    else if (sel == "fixed") b.selection = OrderSelection::fixed;
    else throw ParameterError("backend selection must be 'aic' or 'fixed', got '" + sel + "'");
    b.validate();
    return b;
}

[[nodiscard]] inline json to_json(const BackendConfig& b) {
    return {{"kind", std::string(to_string(b.kind))},
            {"p_max", b.p_max},
            {"d_max", b.d_max},
            {"selection", b.selection == OrderSelection::aic ? "aic" : "fixed"}};
}

[[nodiscard]] inline Range range_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.size() != 2) throw ParameterError(std::string(name) + " range must be [low, high]");
    return {j[0].get<double>(), j[1].get<double>()};
}

[[nodiscard]] inline ParamRanges ranges_from_json(const json& j) {
    ParamRanges r;
    if (j.contains("alpha")) r.alpha = range_from_json(j["alpha"], "alpha");
    if (j.contains("beta")) r.beta = range_from_json(j["beta"], "beta");
    if (j.contains("lambda")) r.lambda = range_from_json(j["lambda"], "lambda");
    r.burn_in = j.value("burn_in", r.burn_in);
    r.validate();
    return r;
}

[[nodiscard]] inline json to_json(const ParamRanges& r) {
    return {{"alpha", {r.alpha.low, r.alpha.high}},
            {"beta", {r.beta.low, r.beta.high}},
            {"lambda", {r.lambda.low, r.lambda.high}},
            {"burn_in", r.burn_in}};
}

/// Everything a run config file may carry. Missing keys keep defaults.
struct ConfigFile {
    RunConfig run;
    ParamRanges ranges;
    std::int64_t vars = 1000;
    std::int64_t steps = 1000;
    int runs = 20;
    ZeroPolicy zero_policy;
};

[[nodiscard]] inline ConfigFile config_from_json(const json& j, const std::string& source = "config") {
    ConfigFile c;
    try {
        c.run.train_length = j.value("train_length", c.run.train_length);
        c.run.horizon = j.value("horizon", c.run.horizon);
        c.run.smoothing = j.value("smoothing", c.run.smoothing);
        c.run.seed = j.value("seed", c.run.seed);
        if (j.contains("backend")) c.run.backend = backend_from_json(j["backend"]);
        if (j.contains("external")) c.run.external_path = j["external"].get<std::string>();
        if (j.contains("zero_policy")) c.zero_policy = ZeroPolicy::parse(j["zero_policy"].get<std::string>());
        c.runs = j.value("runs", c.runs);
        if (j.contains("simulation")) {
            const auto& s = j["simulation"];
            c.ranges = ranges_from_json(s);
            c.vars = s.value("vars", c.vars);
            c.steps = s.value("steps", c.steps);
        }
    } catch (const json::exception& e) {
        throw ParameterError("'" + source + "': " + e.what());
    } catch (const ParameterError& e) {
        throw ParameterError("'" + source + "': " + e.what());
    }
    c.run.validate();
    return c;
}

[[nodiscard]] inline ConfigFile read_config(const std::string& path) { return config_from_json(read_json(path), path); }

// ---------------------------------------------------------------------------
// results

[[nodiscard]] inline json to_json(const Diagnostics& d) {
    return {{"repaired_negatives", d.repaired_negatives},
            {"repaired_solutions", d.repaired_solutions},
            {"max_negatives_in_solution", d.max_negatives_in_solution},
            {"uniform_fallbacks", d.uniform_fallbacks},
            {"clamped_odds", d.clamped_odds},
            {"clamped_totals", d.clamped_totals},
            {"undefined_odds_fallbacks", d.undefined_odds_fallbacks},
            {"ar_fallbacks", d.ar_fallbacks},
            {"external_series", d.external_series},
            {"smoothing", d.smoothing}};
}

[[nodiscard]] inline json to_json(const BoxSummary& s) {
    return {{"count", s.count}, {"min", s.min},     {"q1", s.q1},
            {"median", s.median}, {"q3", s.q3},     {"max", s.max},
            {"lower_fence", s.lower_fence}, {"upper_fence", s.upper_fence}};
}

[[nodiscard]] inline json to_json(const LevelScores& s) {
    return {{"level", std::string(to_string(s.level))},
            {"rmspe", s.rmspe},
            {"skipped_points", s.skipped_points},
            {"undefined", s.undefined},
            {"summary", to_json(s.summary)},
            {"outliers", s.outliers}};
}

[[nodiscard]] inline json to_json(const LevelScoreSet& set) {
    json j;
    for (const auto& s : set) j[std::string(to_string(s.level))] = to_json(s);
    return j;
}

[[nodiscard]] inline json to_json(const ExperimentReport& report) {
    const auto& c = report.config;
    json backends = json::array();
    for (const auto& b : c.backends) backends.push_back(to_json(b));
    json config = {{"runs", c.runs},
                   {"seed", c.seed},
                   {"backends", backends},
                   {"simulation", to_json(c.ranges)},
                   {"pool_size", c.pool_size},
                   {"length", c.length},
                   {"train_length", c.train_length},
                   {"horizon", c.horizon},
                   {"smoothing", c.smoothing},
                   {"zero_policy", c.zero_policy.str()}};

    json runs = json::array();
    for (const auto& r : report.runs) {
        json jr = {{"index", r.index}, {"seed", r.seed}, {"failed", r.failed}};
        if (r.failed) jr["error"] = r.error;
        if (!r.spec.mid_child_counts.empty()) jr["hierarchy"] = to_json(r.spec);
        json results = json::object();
        for (const auto& b : r.results)
            results[b.backend] = {{"scores", to_json(b.scores)}, {"diagnostics", to_json(b.diagnostics)}};
        jr["results"] = results;
        runs.push_back(jr);
    }

    json pooled = json::object();
    for (const auto& [backend, levels] : report.pooled) {
        json jb = json::object();
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const auto& pl = levels[l];
            json outliers = json::array();
            for (const auto& o : pl.outliers) outliers.push_back({{"run", o.run}, {"node", o.node}, {"rmspe", o.rmspe}});
            jb[std::string(to_string(static_cast<Level>(l)))] = {{"summary", to_json(pl.summary)},
                                                                 {"outliers", outliers},
                                                                 {"skipped_points", pl.skipped_points},
                                                                 {"undefined_nodes", pl.undefined_nodes}};
        }
        pooled[backend] = jb;
    }
    return {{"config", config}, {"failed_runs", report.failed_runs()}, {"runs", runs}, {"summary", pooled}};
}

/// Flat `backend,run,level,node,rmspe` rows for plotting.
[[nodiscard]] inline std::string scores_csv(const ExperimentReport& report) {
    std::string out = "backend,run,level,node,rmspe\n";
    for (const auto& [backend, levels] : report.pooled)
        for (std::size_t l = 0; l < levels.size(); ++l)
            for (const auto& s : levels[l].scores)
                out += backend + "," + std::to_string(s.run) + "," + std::string(to_string(static_cast<Level>(l))) +
                       "," + s.node + "," + csv::format_double(s.rmspe) + "\n";
    return out;
}

/// Flat `level,node,rmspe` rows for a single evaluation.
[[nodiscard]] inline std::string scores_csv(const LevelScoreSet& set) {
    std::string out = "level,node,rmspe\n";
    for (const auto& s : set)
        for (const auto& [node, v] : s.rmspe)
            out += std::string(to_string(s.level)) + "," + node + "," + csv::format_double(v) + "\n";
    return out;
}

}  // namespace oddshts::io
