#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "inaccess/runner.hpp"

using namespace inaccess;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json without_header(const fs::path& report) {
    json j = json::parse(slurp(report));
    j.erase("header");
    return j;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("inaccess_test_" + name);
    fs::remove_all(p);
    return p;
}

ScenarioConfig sqrt_scenario() {
    return parse_scenario(json{{"schema_version", 1},
                               {"experiment", "sqrt-bound"},
                               {"field", {{"name", "diag_linear"}}},
                               {"start", {0.5, 0.5}},
                               {"policy", {{"kind", "fixed"}, {"h", 1e-3}}},
                               {"n_paths", 400},
                               {"master_seed", 12},
                               {"parameters", {{"k", 1}, {"t_grid", {0.01, 0.05, 0.2}}}}});
}

}  // namespace

TEST(run, writes_tables_and_report) {
    const auto dir = scratch("files");
    RunOptions opts;
    opts.out_dir = dir;
    opts.debug_paths = true;
    opts.debug_path_count = 2;
    const auto report = run(sqrt_scenario(), opts);
    for (const char* f : {"report.json", "table_sqrt_bound.csv", "table_sqrt_curve.csv", "path_0.csv", "path_1.csv"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const json j = json::parse(slurp(dir / "report.json"));
    EXPECT_TRUE(j["header"].contains("artifact_version"));
    EXPECT_TRUE(j["header"].contains("wall_clock_seconds"));
    EXPECT_EQ(j["results"]["reports"].size(), 3u);
    EXPECT_EQ(j["all_satisfied"], report.all_satisfied());
    EXPECT_EQ(slurp(dir / "table_sqrt_curve.csv").substr(0, 2), "t,");
}

TEST(run, deterministic_across_runs_and_workers) {
    const auto cfg = sqrt_scenario();
    std::vector<fs::path> dirs;
    for (unsigned workers : {1u, 1u, 4u}) {
        dirs.push_back(scratch("det" + std::to_string(dirs.size())));
        RunOptions opts;
        opts.out_dir = dirs.back();
        opts.workers = workers;
        run(cfg, opts);
    }
    for (std::size_t i = 1; i < dirs.size(); ++i) {
        EXPECT_EQ(without_header(dirs[0] / "report.json"), without_header(dirs[i] / "report.json"));
        for (const char* f : {"table_sqrt_bound.csv", "table_sqrt_curve.csv"})
            EXPECT_EQ(slurp(dirs[0] / f), slurp(dirs[i] / f)) << f;
    }
}

TEST(run, integral_verdicts) {
    for (auto [alpha, finite] : {std::pair{0.5, true}, {1.0, false}, {1.5, false}}) {
        const auto cfg = parse_scenario(json{{"schema_version", 1},
                                             {"experiment", "integral-1d"},
                                             {"field", {{"name", "power_law"}, {"params", {{"alpha", alpha}}}}}});
        const auto r = run(cfg);
        EXPECT_EQ(r.results["verdict"], finite ? "finite" : "divergent") << alpha;
    }
}

TEST(run, engine_validation_verdict) {
    const auto cfg = parse_scenario(json{{"schema_version", 1},
                                         {"experiment", "engine-validation"},
                                         {"field", {{"name", "gbm"}}},
                                         {"n_paths", 500},
                                         {"master_seed", 4},
                                         {"parameters", {{"h_grid", {0.0625, 0.03125, 0.015625, 0.0078125}}}}});
    const auto r = run(cfg);
    ASSERT_EQ(r.verdicts.size(), 1u);
    EXPECT_TRUE(r.verdicts[0].passed);
}

TEST(replay_path, reproduces_the_run_path) {
    const auto cfg = sqrt_scenario();
    const auto a = replay_path(cfg, 3);
    // band (1/2, 2) around level 1 for A = 2, k = 1
    const auto b = simulate_path(cfg.field, *cfg.start, 0.2, cfg.policy, stream_seed(12, 3),
                                 [](double, double l) { return l <= 0.5 || l >= 2.0; });
    EXPECT_EQ(a.states, b.states);
    EXPECT_EQ(a.end, b.end);
    const auto c = replay_path(cfg, 3, 13);
    EXPECT_NE(a.states, c.states);
}
