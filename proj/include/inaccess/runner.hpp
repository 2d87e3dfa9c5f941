#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "inaccess/accessibility.hpp"
#include "inaccess/scenario.hpp"
#include "inaccess/verification.hpp"

#ifndef INACCESS_VERSION
#define INACCESS_VERSION "0.0.0"
#endif

namespace inaccess {

struct RunOptions {
    unsigned workers = 1;
    std::filesystem::path out_dir;  // empty: keep everything in memory
    bool debug_paths = false;
    std::size_t debug_path_count = 5;
};

/// A named pass/fail verdict; bound checks and the engine slope test both land here.
struct Verdict {
    std::string name;
    bool passed = true;
};

struct RunReport {
    nlohmann::json config;
    std::string artifact_version = INACCESS_VERSION;
    double wall_clock_seconds = 0.0;
    std::string timestamp;
    nlohmann::json results = nlohmann::json::object();
    std::vector<Verdict> verdicts;
    std::vector<std::pair<std::string, std::string>> tables;  // file name, CSV text
    std::vector<std::string> output_files;

    bool all_satisfied() const {
        for (const auto& v : verdicts)
            if (!v.passed) return false;
        return true;
    }

    /// Timing and version live only in "header"; everything else is deterministic.
    nlohmann::json to_json() const {
        return {{"header",
                 {{"artifact_version", artifact_version},
                  {"wall_clock_seconds", wall_clock_seconds},
                  {"timestamp", timestamp}}},
                {"config", config},
                {"results", results},
                {"all_satisfied", all_satisfied()},
                {"outputs", output_files}};
    }
};

namespace detail {

/// Builds a CSV table with shortest round-trip number formatting.
class CsvTable {
public:
    explicit CsvTable(std::initializer_list<std::string> header) {
        bool first = true;
        for (const auto& h : header) {
            os_ << (first ? "" : ",") << h;
            first = false;
        }
        os_ << '\n';
    }

    template <class... Cells>
    void row(const Cells&... cells) {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
        os_ << '\n';
    }

    std::string str() const { return os_.str(); }

private:
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    template <class I, class = std::enable_if_t<std::is_integral_v<I>>>
    static std::string cell(I i) { return std::to_string(i); }

    std::ostringstream os_;
};

inline void add_bound_rows(CsvTable& table, const BoundCheckReport& r) {
    table.row(r.bound_name, r.lhs.point, r.lhs.ci_low, r.lhs.ci_high, r.lhs.n, r.lhs.censored_n, r.rhs,
              r.vacuous, r.satisfied(), r.slack());
}

inline CsvTable bound_table() {
    return CsvTable{"bound_name", "point", "ci_low", "ci_high", "n", "censored_n", "rhs", "vacuous", "satisfied",
                    "slack"};
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

}  // namespace detail

/// Horizon over which the experiment simulates each path.
inline double experiment_horizon(const ScenarioConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::sqrt_bound: return *std::max_element(cfg.t_grid.begin(), cfg.t_grid.end());
        case Experiment::displacement:
        case Experiment::level_change: return 1.0;
        case Experiment::persistence: return cfg.t0;
        default: return cfg.horizon;
    }
}

/// The early-stop rule the experiment applies to each of its paths.
inline StopRule experiment_stop_rule(const ScenarioConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::hitting: {
            const double eps = cfg.eps_grid.back();
            return [eps](double, double l) { return l <= eps; };
        }
        case Experiment::sqrt_bound:
        case Experiment::displacement:
        case Experiment::level_change: return detail::band_exit(cfg.A, cfg.k);
        case Experiment::persistence: {
            const double target = cfg.A / std::ldexp(1.0, cfg.k + 1);
            return [target](double, double l) { return l <= target; };
        }
        case Experiment::dyadic_escape: {
            const double floor_level = level(cfg.field, *cfg.start) / std::ldexp(1.0, cfg.depth);
            return [floor_level](double, double l) { return l <= floor_level; };
        }
        default: return {};
    }
}

/// Re-simulates path `path_index` of the scenario exactly as the experiment
/// ran it, stop rule included. `seed` overrides the master seed.
inline PathRealization replay_path(const ScenarioConfig& cfg, std::size_t path_index,
                                   std::optional<std::uint64_t> seed = std::nullopt) {
    if (cfg.experiment == Experiment::integral_1d) throw invalid_input("replay: integral-1d simulates no paths");
    const std::uint64_t master = seed.value_or(cfg.master_seed);
    if (cfg.experiment == Experiment::engine_validation) {
        const std::size_t last = cfg.h_grid.size() - 1;
        return simulate_path(cfg.field, *cfg.start, cfg.horizon, StepPolicy::fixed(cfg.h_grid[last]),
                             stream_seed(splitmix64(master + last), path_index));
    }
    const Vector start = cfg.experiment == Experiment::persistence ? cfg.starts[path_index % cfg.starts.size()]
                                                                  : *cfg.start;
    return simulate_path(cfg.field, start, experiment_horizon(cfg), cfg.policy, stream_seed(master, path_index),
                         experiment_stop_rule(cfg));
}

/// Executes the configured experiment. Tables and report.json are written to
/// opts.out_dir when it is set.
inline RunReport run(const ScenarioConfig& cfg, const RunOptions& opts = {}) {
    using detail::CsvTable;
    const auto t_begin = std::chrono::steady_clock::now();
    RunReport report;
    report.config = cfg.echo();
    report.timestamp = detail::utc_timestamp();

    McSettings mc;
    mc.n_paths = cfg.n_paths;
    mc.seed = cfg.master_seed;
    mc.workers = opts.workers;
    mc.method = cfg.crossing;
    auto& res = report.results;

    auto record_bounds = [&](const std::vector<BoundCheckReport>& reports, const std::string& table_name) {
        nlohmann::json arr = nlohmann::json::array();
        CsvTable table = detail::bound_table();
        for (const auto& r : reports) {
            arr.push_back(to_json(r));
            detail::add_bound_rows(table, r);
            report.verdicts.push_back({r.bound_name, r.satisfied()});
        }
        res["reports"] = arr;
        report.tables.emplace_back(table_name, table.str());
    };

    switch (cfg.experiment) {
        case Experiment::hitting: {
            const auto est = estimate_lambda_hitting(cfg.field, *cfg.start, cfg.horizon, cfg.eps_grid, cfg.policy, mc);
            CsvTable table{"eps", "point", "ci_low", "ci_high", "n", "censored_n"};
            nlohmann::json arr = nlohmann::json::array();
            for (std::size_t i = 0; i < est.size(); ++i) {
                nlohmann::json e = to_json(est[i]);
                e["eps"] = cfg.eps_grid[i];
                arr.push_back(e);
                table.row(cfg.eps_grid[i], est[i].point, est[i].ci_low, est[i].ci_high, est[i].n, est[i].censored_n);
            }
            res["horizon"] = cfg.horizon;
            res["estimates"] = arr;
            report.tables.emplace_back("table_hitting.csv", table.str());
            break;
        }
        case Experiment::sqrt_bound: {
            const auto reports = check_sqrt_escape_bound(cfg.field, *cfg.start, cfg.A, cfg.k, cfg.t_grid, cfg.policy, mc);
            record_bounds(reports, "table_sqrt_bound.csv");
            res["C"] = markov_constant(cfg.field.noise_dim(), cfg.field.lipschitz_K());
            const auto slope = fit_escape_exponent(reports);
            res["fitted_exponent"] = slope ? nlohmann::json(*slope) : nlohmann::json(nullptr);
            CsvTable table{"t", "point", "ci_low", "ci_high", "n", "rhs", "vacuous", "satisfied"};
            for (const auto& r : reports)
                table.row(r.parameters.at("t"), r.lhs.point, r.lhs.ci_low, r.lhs.ci_high, r.lhs.n, r.rhs, r.vacuous,
                          r.satisfied());
            report.tables.emplace_back("table_sqrt_curve.csv", table.str());
            break;
        }
        case Experiment::displacement: {
            record_bounds({check_displacement_bound(cfg.field, *cfg.start, cfg.A, cfg.k, cfg.t, cfg.policy, mc)},
                          "table_bounds.csv");
            break;
        }
        case Experiment::level_change: {
            const auto both = check_stopped_bounds(cfg.field, *cfg.start, cfg.A, cfg.k, cfg.t, cfg.policy, mc);
            record_bounds({both.displacement, both.level_change}, "table_bounds.csv");
            break;
        }
        case Experiment::persistence: {
            record_bounds({check_halving_persistence(cfg.field, cfg.starts, cfg.A, cfg.k, cfg.t0, cfg.policy, mc)},
                          "table_bounds.csv");
            break;
        }
        case Experiment::dyadic_escape: {
            std::vector<DyadicEscapeRecord> records(cfg.n_paths);
            for_each_path(cfg.n_paths, opts.workers, [&](std::size_t i) {
                records[i] = dyadic_escape(cfg.field, *cfg.start, cfg.depth, cfg.horizon, cfg.policy,
                                           stream_seed(cfg.master_seed, i), cfg.crossing);
            });
            std::ostringstream rows;
            write_dyadic_csv(records, rows);
            report.tables.emplace_back("table_dyadic_escape.csv", rows.str());

            CsvTable summary{"k", "mean_increment", "ci_low", "ci_high", "observed", "censored", "count_ge_t0"};
            nlohmann::json arr = nlohmann::json::array();
            std::size_t total_ge_t0 = 0;
            for (int k = 0; k < cfg.depth; ++k) {
                std::vector<double> values;
                std::size_t ge = 0;
                for (const auto& r : records) {
                    if (r.censored[k]) continue;
                    values.push_back(r.increments[k]);
                    ge += r.ge_t0(k) ? 1 : 0;
                }
                total_ge_t0 += ge;
                const std::size_t cens = records.size() - values.size();
                nlohmann::json row = {{"k", k}, {"observed", values.size()}, {"censored", cens}, {"count_ge_t0", ge}};
                if (!values.empty()) {
                    const EstimateWithCI e = estimate_mean(values, cens);
                    row["mean_increment"] = to_json(e);
                    summary.row(k, e.point, e.ci_low, e.ci_high, values.size(), cens, ge);
                } else {
                    row["mean_increment"] = nullptr;
                    summary.row(k, std::string(), std::string(), std::string(), std::size_t{0}, cens, ge);
                }
                arr.push_back(row);
            }
            res["t0"] = records.empty() ? 0.0 : records.front().t0;
            res["A"] = records.empty() ? 0.0 : records.front().A;
            res["per_k"] = arr;
            res["total_count_ge_t0"] = total_ge_t0;
            report.tables.emplace_back("table_dyadic_summary.csv", summary.str());
            break;
        }
        case Experiment::integral_1d: {
            const CoefficientField field = cfg.field;
            auto sigma = [&field](double y) {
                Vector p(1);
                p(0) = y;
                return field.sigma(p)(0, 0);
            };
            const AccessibilityResult r = accessibility_integral_1d(sigma, cfg.a);
            res["verdict"] = r.finite ? "finite" : "divergent";
            res["value"] = r.value;
            res["error_estimate"] = r.error_estimate;
            res["windows"] = r.windows.size();
            res["zero_accessible"] = r.finite;
            CsvTable table{"j", "lo", "hi", "contribution", "error", "partial_sum"};
            for (const auto& w : r.windows) table.row(w.j, w.lo, w.hi, w.value, w.error, w.partial_sum);
            report.tables.emplace_back("table_integral_windows.csv", table.str());
            break;
        }
        case Experiment::engine_validation: {
            const nlohmann::json& fp = cfg.field_params;
            const double scale = fp.contains("scale") ? fp.at("scale").get<double>() : 1.0;
            const StrongOrderStudy study = strong_order_gbm(scale, (*cfg.start)(0), cfg.horizon, cfg.h_grid, mc);
            CsvTable table{"h", "strong_error", "ci_low", "ci_high", "n"};
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& row : study.rows) {
                table.row(row.h, row.error.point, row.error.ci_low, row.error.ci_high, row.error.n);
                nlohmann::json e = to_json(row.error);
                e["h"] = row.h;
                arr.push_back(e);
            }
            res["rows"] = arr;
            res["fitted_slope"] = study.slope ? nlohmann::json(*study.slope) : nlohmann::json(nullptr);
            res["slope_range"] = {0.35, 0.65};
            const bool ok = study.slope && *study.slope >= 0.35 && *study.slope <= 0.65;
            res["slope_in_range"] = ok;
            report.verdicts.push_back({"strong_order_slope", ok});
            report.tables.emplace_back("table_strong_order.csv", table.str());
            break;
        }
    }

    std::vector<std::pair<std::string, std::string>> debug_files;
    if (opts.debug_paths && cfg.experiment != Experiment::integral_1d) {
        const std::size_t count = std::min(opts.debug_path_count, cfg.n_paths);
        for (std::size_t i = 0; i < count; ++i) {
            std::ostringstream os;
            write_path_csv(replay_path(cfg, i), os);
            debug_files.emplace_back("path_" + std::to_string(i) + ".csv", os.str());
        }
    }

    for (const auto& [name, text] : report.tables) report.output_files.push_back(name);
    for (const auto& [name, text] : debug_files) report.output_files.push_back(name);
    report.output_files.push_back("report.json");

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();

    if (!opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        auto write = [&](const std::string& name, const std::string& text) {
            std::ofstream f(opts.out_dir / name, std::ios::binary);
            if (!f) throw std::runtime_error("cannot write " + (opts.out_dir / name).string());
            f << text;
        };
        for (const auto& [name, text] : report.tables) write(name, text);
        for (const auto& [name, text] : debug_files) write(name, text);
        write("report.json", report.to_json().dump(2) + "\n");
    }
    return report;
}

}  // namespace inaccess
