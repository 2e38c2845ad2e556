// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "oddshts/oddshts.hpp"

#include <Eigen/Dense>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace oddshts;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("%s AC%d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

/// A = J - I times its closed-form inverse, column by column via solve_system.
void matrix_identity() {
    const auto start = Clock::now();
    double worst = 0.0;
    for (std::size_t n = 2; n <= 50; ++n) {
        Eigen::MatrixXd inv(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            OddsSystem unit{n, std::vector<double>(n, 0.0), 0.0};
            unit.rhs[j] = 1.0;
            const auto col = solve_system(unit);
            for (std::size_t i = 0; i < n; ++i) inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
        }
        const Eigen::MatrixXd a = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
        const Eigen::MatrixXd prod = a * inv;
        worst = std::max(worst, (prod - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
    }
    const double t = seconds_since(start);
    report(1, "matrix identity n=2..50", worst <= 1e-12 && t < 1.0, fmt("max |A*Ainv - I| = %.3g, %.3f s", worst, t));
}

void dense_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<std::size_t> size(2, 20);
    std::uniform_real_distribution<double> odds(0.0, 10.0), total(0.0, 1000.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = size(rng);
        OddsVector o{std::vector<double>(n), 0.0};
        for (auto& v : o.values) v = odds(rng);
        const auto sys = build_system(o, total(rng));
        const auto y = solve_system(sys);
        const Eigen::MatrixXd a = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(sys.rhs.data(), static_cast<Eigen::Index>(n));
        const Eigen::VectorXd ref = a.partialPivLu().solve(b);
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(y[i] - ref(static_cast<Eigen::Index>(i))));
    }
    const double t = seconds_since(start);
    report(2, "dense solver equivalence", worst <= 1e-9 && t < 5.0, fmt("1000 systems, max diff %.3g, %.3f s", worst, t));
}

void exact_round_trip() {
    std::mt19937_64 rng(1002);
    std::uniform_int_distribution<std::size_t> size(2, 10);
    std::uniform_real_distribution<double> value(0.1, 100.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> y(size(rng));
        double sum = 0.0;
        for (auto& v : y) {
            v = value(rng);
            sum += v;
        }
        OddsVector o{std::vector<double>(y.size()), 0.0};
        for (std::size_t k = 0; k < y.size(); ++k) o.values[k] = compute_odds(y, k, 0.0);
        const auto back = disaggregate(sum, o);
        for (std::size_t k = 0; k < y.size(); ++k) worst = std::max(worst, std::abs(back[k] - y[k]));
    }
    report(3, "exact round trip", worst <= 1e-9, fmt("1000 vectors, max error %.3g", worst));
}

void repair_contract() {
    std::mt19937_64 rng(1003);
    std::uniform_int_distribution<std::size_t> size(2, 20);
    std::uniform_real_distribution<double> value(-50.0, 100.0), total(0.0, 1000.0), coin(0.0, 1.0);
    double worst_sum = 0.0, most_negative = 0.0;
    std::size_t injected = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> y(size(rng));
        for (auto& v : y) v = value(rng);
        // Force at least one negative, and sometimes make every entry negative.
        y[0] = -std::abs(y[0]) - 1e-3;
        if (coin(rng) < 0.05)
            for (auto& v : y) v = -std::abs(v) - 1e-3;
        for (double v : y) injected += v < 0.0;
        const double s = total(rng);
        const auto out = repair_and_rescale(y, s);
        double sum = 0.0;
        for (double v : out) {
            most_negative = std::min(most_negative, v);
            sum += v;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - s));
    }
    report(4, "repair contract", most_negative >= 0.0 && worst_sum <= 1e-9,
           fmt("1000 vectors, %zu negatives injected, min output %.3g, max |sum - S| %.3g", injected, most_negative,
               worst_sum));
}

void hierarchical_consistency() {
    double worst = 0.0;
    std::size_t checked = 0;
    bool ok = true;
    for (std::uint64_t r = 0; r < 20; ++r) {
        const std::uint64_t seed = derive_seed(2024, r);
        const auto spec = sample_hierarchy_spec(1000, derive_seed(seed, 0));
        const auto h = spec.to_hierarchy();
        const auto levels = aggregate(h, simulate_for_spec(spec, 1000, ParamRanges{}, derive_seed(seed, 1)));
        for (auto kind : {BackendKind::naive, BackendKind::ar}) {
            RunConfig cfg;
            cfg.backend.kind = kind;
            const auto fc = run_forecast(h, levels, cfg);
            const auto lv = fc.as_levels();
            if (lv.top.size() != 30) ok = false;
            ok = ok && validate(h, lv, kForecastTolerance).ok();
            for (std::size_t s = 0; s < lv.top.size(); ++s) {
                double top = 0.0;
                for (const auto& mid : h.mids()) {
                    double m = 0.0;
                    for (const auto& c : mid.children) m += lv.bottom.at(c)[s];
                    worst = std::max(worst, std::abs(m - lv.mid.at(mid.id)[s]));
                    top += m;
                }
                worst = std::max(worst, std::abs(top - lv.top[s]));
            }
            ++checked;
        }
    }
    report(5, "hierarchical consistency", ok && worst <= kForecastTolerance,
           fmt("%zu forecasts x 30 steps, max aggregation gap %.3g", checked, worst));
}

ExperimentReport desk_experiment(const ParamRanges& ranges) {
    ExperimentConfig cfg;
    cfg.runs = 20;
    cfg.seed = 42;
    cfg.ranges = ranges;
    return experiment(cfg);
}

void desk_replication() {
    const auto start = Clock::now();
    const auto rep = desk_experiment(ParamRanges{});
    const double t = seconds_since(start);
    const auto& ar = rep.pooled.at("ar");
    const double top = ar[0].summary.median, mid = ar[1].summary.median, bottom = ar[2].summary.median;
    const bool ordered = top <= mid && mid <= bottom;
    const bool ok = rep.failed_runs() == 0 && top < 5.0 && mid < 15.0 && bottom < 15.0 && ordered && t < 600.0;
    report(6, "desk-scale replication (R=20, ar)", ok,
           fmt("median RMSPE top %.2f%% (<5), mid %.2f%% (<15), bottom %.2f%% (<15), ordering %s, %zu failed runs, "
               "%.1f s",
               top, mid, bottom, ordered ? "holds" : "violated", rep.failed_runs(), t));
    std::printf("INFO AC6 top q3 %.2f%%, mid q3 %.2f%%, bottom q3 %.2f%%\n", ar[0].summary.q3, ar[1].summary.q3,
                ar[2].summary.q3);

    ParamRanges high;
    high.lambda = {100.0, 1000.0};
    const auto hi = desk_experiment(high);
    const auto& har = hi.pooled.at("ar");
    std::printf("INFO AC6 sensitivity (not a pass), lambda ~ U(100,1000): median top %.2f%%, mid %.2f%%, bottom %.2f%%\n",
                har[0].summary.median, har[1].summary.median, har[2].summary.median);
}

void simulator_statistics() {
    const auto start = Clock::now();
    const InarmaParams settings[] = {{0.1, 0.0, 1.0}, {0.3, 0.0, 5.0}, {0.5, 0.0, 2.0}, {0.7, 0.0, 3.0}, {0.9, 0.0, 0.5}};
    const std::int64_t n = 20000;
    double worst_z = 0.0;
    std::uint64_t seed = 7000;
    for (const auto& p : settings) {
        const auto x = inarma_generate(p, n, seed++);
        double sum = 0.0;
        for (auto v : x) sum += static_cast<double>(v);
        const double mu = p.lambda / (1.0 - p.alpha);
        // Poisson(mu) marginal, lag-k autocorrelation alpha^k.
        const double se = std::sqrt(mu * (1.0 + p.alpha) / (1.0 - p.alpha) / static_cast<double>(n));
        worst_z = std::max(worst_z, std::abs(sum / static_cast<double>(n) - mu) / se);
    }
    const double t = seconds_since(start);
    report(7, "simulator statistics", worst_z <= 3.0 && t < 10.0,
           fmt("5 INAR(1) settings, T=20000, max |mean - mu| = %.2f SE, %.3f s", worst_z, t));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    const auto dir = fs::temp_directory_path() / "oddshts_acceptance";
    fs::remove_all(dir);
    std::string payload[2];
    bool ran = true;
    for (int i = 0; i < 2; ++i) {
        const auto out = dir / ("run" + std::to_string(i));
        const std::string cmd =
            std::string(ODDSHTS_CLI) + " experiment --runs 2 --seed 20260 --out " + out.string() + " >/dev/null 2>&1";
        const int raw = std::system(cmd.c_str());
        ran = ran && WIFEXITED(raw) && WEXITSTATUS(raw) == 0;
        payload[i] = slurp(out / "report.json") + slurp(out / "scores.csv");
    }
    const bool same = ran && !payload[0].empty() && payload[0] == payload[1];
    report(8, "determinism", same,
           fmt("two 'experiment --runs 2' invocations, %zu bytes each, %s", payload[0].size(),
               same ? "byte-identical" : "differ or failed"));
}

void guarded(const std::function<void()>& check, int id, const char* name) {
    try {
        check();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("threw: ") + e.what());
    }
}

}  // namespace

int main() {
    guarded(matrix_identity, 1, "matrix identity n=2..50");
    guarded(dense_oracle, 2, "dense solver equivalence");
    guarded(exact_round_trip, 3, "exact round trip");
    guarded(repair_contract, 4, "repair contract");
    guarded(hierarchical_consistency, 5, "hierarchical consistency");
    guarded(desk_replication, 6, "desk-scale replication (R=20, ar)");
    guarded(simulator_statistics, 7, "simulator statistics");
    guarded(determinism, 8, "determinism");
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
