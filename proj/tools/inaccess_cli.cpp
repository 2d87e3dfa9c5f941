// Command-line front end: run, validate, catalog, replay.
//
// Exit codes: 0 when every check in the run is satisfied or vacuous,
// 2 when some bound check is unsatisfied, 1 on any error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "inaccess/inaccess.hpp"
#include "inaccess/runner.hpp"
#include "inaccess/scenario.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw inaccess::invalid_input("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo checks of level-set inaccessibility for Lipschitz SDEs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", INACCESS_VERSION);

    unsigned workers = 1;
    std::string out_dir = "out";
    bool debug_paths = false;
    std::string config_path;

    auto* run_cmd = app.add_subcommand("run", "run the experiment described by a scenario file");
    run_cmd->add_option("config", config_path, "scenario JSON file")->required();
    run_cmd->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", out_dir, "output directory for report.json and table_*.csv");
    run_cmd->add_flag("--debug-paths", debug_paths, "also dump the first few simulated paths as CSV");

    auto* validate_cmd = app.add_subcommand("validate", "parse and validate a scenario file");
    validate_cmd->add_option("config", config_path, "scenario JSON file")->required();

    auto* catalog_cmd = app.add_subcommand("catalog", "list built-in coefficient fields");

    std::uint64_t replay_seed = 0;
    std::size_t replay_path_index = 0;
    auto* replay_cmd = app.add_subcommand("replay", "re-simulate one path of a scenario and print it as CSV");
    replay_cmd->add_option("config", config_path, "scenario JSON file")->required();
    auto* seed_opt = replay_cmd->add_option("--seed", replay_seed, "master seed (default: the scenario's)");
    replay_cmd->add_option("--path", replay_path_index, "path index")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*catalog_cmd) {
            for (const auto& entry : inaccess::catalog()) {
                std::cout << entry.name << "  (d=" << entry.field.dim() << ", m=" << entry.field.noise_dim()
                          << ", K=" << entry.field.lipschitz_K() << ")\n    " << entry.analytic_notes << "\n";
            }
            return 0;
        }

        const inaccess::ScenarioConfig cfg = inaccess::parse_scenario(read_file(config_path));

        if (*validate_cmd) {
            std::cout << cfg.echo().dump(2) << "\n";
            return 0;
        }

        if (*replay_cmd) {
            std::optional<std::uint64_t> seed;
            if (seed_opt->count() > 0) seed = replay_seed;
            inaccess::write_path_csv(inaccess::replay_path(cfg, replay_path_index, seed), std::cout);
            return 0;
        }

        inaccess::RunOptions opts;
        opts.workers = workers;
        opts.out_dir = out_dir;
        opts.debug_paths = debug_paths;
        const inaccess::RunReport report = inaccess::run(cfg, opts);
        for (const auto& v : report.verdicts)
            std::cout << (v.passed ? "ok    " : "FAIL  ") << v.name << "\n";
        std::cout << "wrote " << report.output_files.size() << " file(s) to " << out_dir << " in "
                  << report.wall_clock_seconds << " s\n";
        return report.all_satisfied() ? 0 : 2;
    } catch (const inaccess::numerical_blowup& e) {
        std::cerr << "error: " << e.what() << " [seed " << e.seed() << ", step " << e.step() << "]\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
