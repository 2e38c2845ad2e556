#include "oddshts/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "oddshts_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result run(const std::string& args, const fs::path& dir) {
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string(ODDSHTS_CLI) + " " + args + " >/dev/null 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

}  // namespace

TEST(Cli, MissingHierarchyFileExitsOneAndNamesPath) {
    const auto dir = scratch("missing");
    const auto r = run("forecast --hierarchy " + (dir / "nope.json").string() + " --series x.csv --out " +
                           (dir / "out").string(),
                       dir);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("nope.json"), std::string::npos) << r.err;
}

TEST(Cli, MissingRequiredOptionIsUsageError) {
    const auto dir = scratch("usage");
    EXPECT_EQ(run("experiment --runs 2 --out " + dir.string(), dir).status, 2);
    EXPECT_EQ(run("bogus", dir).status, 2);
    EXPECT_EQ(run("--help", dir).status, 0);
}

TEST(Cli, SimulateIsReproducible) {
    const auto dir = scratch("simulate");
    const std::string common = "simulate --vars 60 --steps 50 --seed 4 --out ";
    ASSERT_EQ(run(common + (dir / "a").string(), dir).status, 0);
    ASSERT_EQ(run(common + (dir / "b").string(), dir).status, 0);
    EXPECT_EQ(slurp(dir / "a" / "series.csv"), slurp(dir / "b" / "series.csv"));
    EXPECT_EQ(slurp(dir / "a" / "hierarchy.json"), slurp(dir / "b" / "hierarchy.json"));
    const auto frame = oddshts::io::read_series_csv((dir / "a" / "series.csv").string());
    EXPECT_EQ(frame.width(), 60u);
    EXPECT_EQ(frame.length(), 50u);
}

TEST(Cli, ExperimentWritesReport) {
    const auto dir = scratch("experiment");
    ASSERT_EQ(run("experiment --runs 2 --seed 3 --backend naive,ar --jobs 1 --out " + dir.string(), dir).status, 0);
    const auto report = oddshts::io::read_json((dir / "report.json").string());
    EXPECT_EQ(report.at("runs").size(), 2u);
    EXPECT_EQ(report.at("failed_runs"), 0);
    EXPECT_TRUE(report.at("summary").contains("naive"));
    EXPECT_TRUE(report.at("summary").contains("ar"));
    EXPECT_TRUE(fs::exists(dir / "scores.csv"));
}

TEST(Cli, SimulateForecastEvaluateRoundTrip) {
    const auto dir = scratch("roundtrip");
    const auto data = dir / "data", fc = dir / "fc", ev = dir / "ev";
    ASSERT_EQ(run("simulate --vars 60 --steps 120 --seed 8 --out " + data.string(), dir).status, 0);
    const auto series_before = slurp(data / "series.csv");
    const auto hierarchy_before = slurp(data / "hierarchy.json");

    const auto f = run("forecast --hierarchy " + (data / "hierarchy.json").string() + " --series " +
                           (data / "series.csv").string() + " --backend ar --train-length 100 --horizon 20 --out " +
                           fc.string(),
                       dir);
    ASSERT_EQ(f.status, 0) << f.err;
    const auto levels = oddshts::io::read_levels_csv((fc / "forecast.csv").string());
    EXPECT_EQ(levels.top.size(), 20u);
    const auto h = oddshts::io::read_hierarchy((data / "hierarchy.json").string());
    EXPECT_TRUE(oddshts::validate(h, levels, oddshts::kForecastTolerance).ok());
    EXPECT_TRUE(fs::exists(fc / "diagnostics.json"));

    const auto e = run("evaluate --forecast " + (fc / "forecast.csv").string() + " --actual " +
                           (fc / "actual.csv").string() + " --out " + ev.string(),
                       dir);
    ASSERT_EQ(e.status, 0) << e.err;
    const auto eval = oddshts::io::read_json((ev / "evaluation.json").string());
    EXPECT_TRUE(eval.dump().find("bottom") != std::string::npos);
    EXPECT_TRUE(fs::exists(ev / "scores.csv"));

    EXPECT_EQ(slurp(data / "series.csv"), series_before);
    EXPECT_EQ(slurp(data / "hierarchy.json"), hierarchy_before);
}

TEST(Cli, ExternalBackendNamesMissingTop) {
    const auto dir = scratch("external");
    const auto data = dir / "data";
    ASSERT_EQ(run("simulate --vars 60 --steps 60 --seed 2 --out " + data.string(), dir).status, 0);
    oddshts::io::write_text((dir / "ext.csv").string(), "id,step,value\nM1,1,1\nM1,2,1\n");
    const auto r = run("forecast --hierarchy " + (data / "hierarchy.json").string() + " --series " +
                           (data / "series.csv").string() + " --backend external --external " +
                           (dir / "ext.csv").string() + " --train-length 50 --horizon 2 --out " +
                           (dir / "out").string(),
                       dir);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("'TOP'"), std::string::npos) << r.err;
}
