// oddshts: simulate count hierarchies, forecast them top-down through odds,
// and score the forecasts.
//
//   oddshts simulate   --vars N --steps T --seed S --out DIR [--config C.json]
//   oddshts forecast   --hierarchy H.json --series S.csv [--config C.json]
//                      [--backend naive|mean|drift|ar|external] [--external E.csv] --out DIR
//   oddshts evaluate   --forecast F.csv --actual A.csv [--zero-policy skip|epsilon:E] --out DIR
//   oddshts experiment --runs R --backend B[,B...] --seed S [--jobs J] --out DIR [--config C.json]
//
// Exit status: 0 success, 1 data or parameter error, 2 usage error.

#include "oddshts/oddshts.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace oddshts;

namespace {

int verbosity = 0;

void note(const std::string& msg) {
    if (verbosity > 0) std::cerr << msg << "\n";
}

std::string join(const fs::path& dir, const char* name) { return (dir / name).string(); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

io::ConfigFile load_config(const std::optional<std::string>& path) {
    return path ? io::read_config(*path) : io::ConfigFile{};
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::optional<std::int64_t> vars;
    std::optional<std::int64_t> steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config;
    std::string out;
};

void run_simulate(const SimulateArgs& a) {
    const auto cfg = load_config(a.config);
    const std::int64_t vars = a.vars.value_or(cfg.vars);
    const std::int64_t steps = a.steps.value_or(cfg.steps);
    const std::uint64_t seed = a.seed.value_or(cfg.run.seed);
    ensure_dir(a.out);

    const auto frame = simulate_dataset(vars, steps, cfg.ranges, seed);
    io::write_series_csv(join(a.out, "series.csv"), frame);
    note("wrote " + std::to_string(vars) + " series x " + std::to_string(steps) + " steps");

    if (vars >= kMinPoolSize) {
        // Stream 0 is free: pool variables use streams 1..vars.
        const auto spec = sample_hierarchy_spec(vars, derive_seed(seed, 0));
        io::write_json(join(a.out, "hierarchy.json"), io::to_json(spec));
        note("hierarchy with " + std::to_string(spec.total_children()) + " bottom series");
    } else {
        std::cerr << "warning: --vars " << vars << " is below " << kMinPoolSize
                  << "; no hierarchy.json written\n";
    }
}

// ---------------------------------------------------------------------------

struct ForecastArgs {
    std::string hierarchy;
    std::string series;
    std::optional<std::string> config;
    std::optional<std::string> backend;
    std::optional<std::string> external;
    std::optional<int> train_length;
    std::optional<int> horizon;
    std::string out;
};

void run_forecast_cmd(const ForecastArgs& a) {
    auto cfg = load_config(a.config);
    auto& rc = cfg.run;
    if (a.train_length) rc.train_length = *a.train_length;
    if (a.horizon) rc.horizon = *a.horizon;
    if (a.external) rc.external_path = *a.external;
    bool exclusive = false;
    if (a.backend) {
        if (*a.backend == "external") exclusive = true;
        else rc.backend.kind = parse_backend(*a.backend);
    }
    if (exclusive && !rc.external_path) throw ParameterError("--backend external requires --external");
    rc.validate();

    const auto hierarchy = io::read_hierarchy(a.hierarchy);
    const auto frame = io::read_series_csv(a.series);
    const auto levels = [&] {
        try {
            return aggregate(hierarchy, frame);
        } catch (const StructuralError& e) {
            throw StructuralError("'" + a.series + "': " + e.what());
        }
    }();

    HierForecast hf;
    if (rc.external_path) {
        const auto ext = import_external_forecasts(*rc.external_path);
        hf = run_with_external(hierarchy, levels, rc, ext,
                               exclusive ? ExternalMode::exclusive : ExternalMode::supplement);
    } else {
        hf = run_forecast(hierarchy, levels, rc);
    }

    ensure_dir(a.out);
    io::write_levels_csv(join(a.out, "forecast.csv"), hf.as_levels());
    const auto end = static_cast<std::size_t>(rc.train_length + rc.horizon);
    const bool has_actual = levels.length() >= end;
    if (has_actual)
        io::write_levels_csv(join(a.out, "actual.csv"),
                             levels.slice(static_cast<std::size_t>(rc.train_length), static_cast<std::size_t>(rc.horizon)));

    io::json diag = io::to_json(hf.diagnostics);
    diag["backend"] = exclusive ? std::string("external") : std::string(to_string(rc.backend.kind));
    diag["train_length"] = rc.train_length;
    diag["horizon"] = rc.horizon;
    diag["origin"] = rc.train_length - 1;
    diag["actual_written"] = has_actual;
    io::write_json(join(a.out, "diagnostics.json"), diag);
    note("forecast " + std::to_string(rc.horizon) + " steps for " + std::to_string(hf.bottom.size()) +
         " bottom series");
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string forecast;
    std::string actual;
    std::string zero_policy = "skip";
    std::optional<std::string> hierarchy;
    int train_length = 970;
    std::string out;
};

void run_evaluate(const EvaluateArgs& a) {
    const auto policy = ZeroPolicy::parse(a.zero_policy);
    const auto predicted = io::read_levels_csv(a.forecast);

    LevelSeries actual;
    const auto header = csv::split(csv::read_lines(a.actual).front());
    if (!header.empty() && header[0] == "t") {
        if (!a.hierarchy) throw ParameterError("'" + a.actual + "' is a series frame; --hierarchy is required");
        const auto hierarchy = io::read_hierarchy(*a.hierarchy);
        const auto levels = aggregate(hierarchy, io::read_series_csv(a.actual));
        actual = levels.slice(static_cast<std::size_t>(a.train_length), predicted.length());
    } else {
        actual = io::read_levels_csv(a.actual);
    }
    if (actual.length() != predicted.length())
        throw DataError("horizon mismatch: '" + a.forecast + "' has " + std::to_string(predicted.length()) +
                        " steps, '" + a.actual + "' has " + std::to_string(actual.length()));

    const auto scores = evaluate(predicted, actual, policy);
    ensure_dir(a.out);
    io::json j = io::to_json(scores);
    j["zero_policy"] = policy.str();
    io::write_json(join(a.out, "evaluation.json"), j);
    io::write_text(join(a.out, "scores.csv"), io::scores_csv(scores));
    for (const auto& s : scores)
        std::cerr << to_string(s.level) << ": median RMSPE " << s.summary.median << "% over " << s.summary.count
                  << " node(s)\n";
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
    std::optional<int> runs;
    std::string backends = "ar";
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    std::optional<std::string> config;
    std::string out;
};

void run_experiment(const ExperimentArgs& a) {
    const auto cfg = load_config(a.config);
    ExperimentConfig ec;
    ec.runs = a.runs.value_or(cfg.runs);
    ec.seed = a.seed;
    ec.ranges = cfg.ranges;
    ec.pool_size = cfg.vars;
    ec.length = cfg.steps;
    ec.train_length = cfg.run.train_length;
    ec.horizon = cfg.run.horizon;
    ec.smoothing = cfg.run.smoothing;
    ec.zero_policy = cfg.zero_policy;
    ec.jobs = a.jobs > 0 ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
    ec.backends.clear();
    for (const auto& name : split_list(a.backends)) {
        BackendConfig b = cfg.run.backend;
        b.kind = parse_backend(name);
        ec.backends.push_back(b);
    }

    const auto report = experiment(ec);
    ensure_dir(a.out);
    io::write_json(join(a.out, "report.json"), io::to_json(report));
    io::write_text(join(a.out, "scores.csv"), io::scores_csv(report));
    for (const auto& [backend, levels] : report.pooled)
        for (std::size_t l = 0; l < levels.size(); ++l)
            std::cerr << backend << " " << to_string(static_cast<Level>(l)) << ": median RMSPE "
                      << levels[l].summary.median << "%\n";
    if (report.failed_runs() > 0) std::cerr << "warning: " << report.failed_runs() << " run(s) failed\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Top-down hierarchical forecasting through forecast odds"};
    app.require_subcommand(1);
    app.add_flag("-v,--verbose", verbosity, "Progress messages on standard error");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate INARMA count series and a random hierarchy");
    simulate->add_option("--vars", sim.vars, "Number of pool variables");
    simulate->add_option("--steps", sim.steps, "Series length");
    simulate->add_option("--seed", sim.seed, "Root random seed");
    simulate->add_option("--config", sim.config, "Run config JSON (simulation ranges, seed)");
    simulate->add_option("--out", sim.out, "Output directory")->required();

    ForecastArgs fc;
    auto* forecast_cmd = app.add_subcommand("forecast", "Forecast a hierarchy top-down");
    forecast_cmd->add_option("--hierarchy", fc.hierarchy, "Hierarchy JSON")->required();
    forecast_cmd->add_option("--series", fc.series, "Bottom-level series CSV")->required();
    forecast_cmd->add_option("--config", fc.config, "Run config JSON");
    forecast_cmd->add_option("--backend", fc.backend, "naive|mean|drift|ar|external");
    forecast_cmd->add_option("--external", fc.external, "External forecasts CSV (id,step,value)");
    forecast_cmd->add_option("--train-length", fc.train_length, "Training window length");
    forecast_cmd->add_option("--horizon", fc.horizon, "Forecast horizon");
    forecast_cmd->add_option("--out", fc.out, "Output directory")->required();

    EvaluateArgs ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score forecasts by RMSPE per level");
    evaluate_cmd->add_option("--forecast", ev.forecast, "Forecast CSV (level,id,step,value)")->required();
    evaluate_cmd->add_option("--actual", ev.actual, "Actual values CSV (levels or series format)")->required();
    evaluate_cmd->add_option("--zero-policy", ev.zero_policy, "skip | epsilon:E");
    evaluate_cmd->add_option("--hierarchy", ev.hierarchy, "Hierarchy JSON, for a series-format --actual");
    evaluate_cmd->add_option("--train-length", ev.train_length, "Holdout start, for a series-format --actual");
    evaluate_cmd->add_option("--out", ev.out, "Output directory")->required();

    ExperimentArgs ex;
    auto* experiment_cmd = app.add_subcommand("experiment", "Repeated simulate/forecast/evaluate runs");
    experiment_cmd->add_option("--runs", ex.runs, "Number of simulated hierarchies");
    experiment_cmd->add_option("--backend", ex.backends, "Comma-separated backends");
    experiment_cmd->add_option("--seed", ex.seed, "Root random seed")->required();
    experiment_cmd->add_option("--jobs", ex.jobs, "Worker threads (default: processors)");
    experiment_cmd->add_option("--config", ex.config, "Run config JSON");
    experiment_cmd->add_option("--out", ex.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return 2;
    }

    try {
        if (simulate->parsed()) run_simulate(sim);
        else if (forecast_cmd->parsed()) run_forecast_cmd(fc);
        else if (evaluate_cmd->parsed()) run_evaluate(ev);
        else if (experiment_cmd->parsed()) run_experiment(ex);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
