#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "inaccess/catalog.hpp"
#include "inaccess/coefficients.hpp"
#include "inaccess/constants.hpp"
#include "inaccess/estimates.hpp"
#include "inaccess/parallel.hpp"
#include "inaccess/rng.hpp"
#include "inaccess/sde_engine.hpp"
#include "inaccess/stopping_times.hpp"

namespace inaccess {

/// Monte Carlo run settings shared by every estimator. Path i always uses
/// stream_seed(seed, i).
struct McSettings {
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    CrossingMethod method = CrossingMethod::interpolated;
};

/// upper: the estimated quantity must not exceed rhs; lower: it must reach rhs.
enum class BoundSense { upper, lower };

struct BoundCheckReport {
    std::string bound_name;
    EstimateWithCI lhs;
    double rhs = 0.0;
    BoundSense sense = BoundSense::upper;
    bool vacuous = false;
    std::map<std::string, double> parameters;

    /// CI-aware comparison, always derived from the stored fields.
    bool satisfied() const {
        if (vacuous) return true;
        return sense == BoundSense::upper ? lhs.ci_low <= rhs : lhs.ci_high >= rhs;
    }
    /// Distance of the point estimate from the bound, positive on the safe side.
    double slack() const { return sense == BoundSense::upper ? rhs - lhs.point : lhs.point - rhs; }
};

inline nlohmann::json to_json(const EstimateWithCI& e) {
    return {{"point", e.point}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high},
            {"n", e.n},         {"censored_n", e.censored_n}, {"method", to_string(e.method)}};
}

inline nlohmann::json to_json(const BoundCheckReport& r) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    return {{"bound_name", r.bound_name},
            {"parameters", params},
            {"lhs", to_json(r.lhs)},
            {"rhs", r.rhs},
            {"sense", r.sense == BoundSense::upper ? "upper" : "lower"},
            {"vacuous", r.vacuous},
            {"satisfied", r.satisfied()},
            {"slack", r.slack()}};
}

namespace detail {

inline void require_mc(const McSettings& mc, const char* who) {
    if (mc.n_paths < 1) throw invalid_input(std::string(who) + ": n_paths must be >= 1");
}

inline std::map<std::string, double> common_parameters(const CoefficientField& field, const StepPolicy& policy,
                                                       const McSettings& mc) {
    std::map<std::string, double> p{{"m", field.noise_dim()},
                                    {"d", field.dim()},
                                    {"n_paths", static_cast<double>(mc.n_paths)},
                                    {"h_max", policy.h_max}};
    if (field.lipschitz_source() != LipschitzSource::unknown) {
        p["K"] = field.lipschitz_K();
        p["K_estimated"] = field.lipschitz_source() == LipschitzSource::estimated ? 1.0 : 0.0;
    }
    return p;
}

inline StopRule band_exit(double A, int k) {
    const double lo = A / std::ldexp(1.0, k + 1);
    const double hi = A / std::ldexp(1.0, k - 1);
    return [lo, hi](double, double l) { return l <= lo || l >= hi; };
}

}  // namespace detail

/// Pair of reports from one batch of paths: displacement and level change.
struct StoppedBoundReports {
    BoundCheckReport displacement;
    BoundCheckReport level_change;
};

/// Estimates, from shared paths started at x with level(x) = A/2^k,
///   E[|x - X_{t^S_k}|^2 1{S_k <= 1}]   against (m+1) (A/2^(k-1)) t, and
///   E[|level(x) - level(X_{t^S_k})| 1{S_k <= 1}]
///        against 2 (3A/2^k)^(1/2) K E[|x - X_{t^S_k}|^2 1{S_k <= 1}]^(1/2).
/// The level-change rhs uses the upper CI end of the displacement estimate.
inline StoppedBoundReports check_stopped_bounds(const CoefficientField& field, const Eigen::Ref<const Vector>& x,
                                                double A, int k, double t, const StepPolicy& policy,
                                                const McSettings& mc) {
    detail::require_mc(mc, "check_stopped_bounds");
    if (k < 1) throw invalid_input("check_stopped_bounds: k must be >= 1");
    if (!(t > 0.0 && t <= 1.0)) throw invalid_input("check_stopped_bounds: t must lie in (0, 1]");
    const double level_x = level(field, x);
    require_start_level(level_x, A, k, "check_stopped_bounds");

    const Vector start = x;
    std::vector<double> disp(mc.n_paths, 0.0);
    std::vector<double> dlev(mc.n_paths, 0.0);
    std::vector<char> censored(mc.n_paths, 0);
    const StopRule stop = detail::band_exit(A, k);

    for_each_path(mc.n_paths, mc.workers, [&](std::size_t i) {
        const PathRealization path = simulate_path(field, start, 1.0, policy, stream_seed(mc.seed, i), stop);
        const LevelCrossing s = sandwich_time(path, field, A, k, mc.method);
        if (s.censored || s.time > 1.0) {
            censored[i] = 1;
            return;
        }
        const Vector stopped = s.time <= t ? crossing_state(path, s) : path.state_at(t);
        disp[i] = (start - stopped).squaredNorm();
        dlev[i] = std::abs(level_x - level(field, stopped));
    });

    std::size_t n_censored = 0;
    for (char c : censored) n_censored += c;

    auto params = detail::common_parameters(field, policy, mc);
    params["A"] = A;
    params["k"] = k;
    params["t"] = t;

    StoppedBoundReports out;
    out.displacement.bound_name = "displacement";
    out.displacement.lhs = estimate_mean(disp, n_censored);
    out.displacement.rhs = (field.noise_dim() + 1) * (A / std::ldexp(1.0, k - 1)) * t;
    out.displacement.parameters = params;

    out.level_change.bound_name = "level_change";
    out.level_change.lhs = estimate_mean(dlev, n_censored);
    const double K = field.lipschitz_K();
    out.level_change.rhs = 2.0 * std::sqrt(3.0 * A / std::ldexp(1.0, k)) * K *
                           std::sqrt(std::max(0.0, out.displacement.lhs.ci_high));
    out.level_change.parameters = params;
    out.level_change.parameters["displacement_ci_high"] = out.displacement.lhs.ci_high;
    return out;
}

inline BoundCheckReport check_displacement_bound(const CoefficientField& field, const Eigen::Ref<const Vector>& x,
                                                 double A, int k, double t, const StepPolicy& policy,
                                                 const McSettings& mc) {
    return check_stopped_bounds(field, x, A, k, t, policy, mc).displacement;
}

inline BoundCheckReport check_level_change_bound(const CoefficientField& field, const Eigen::Ref<const Vector>& x,
                                                 double A, int k, double t, const StepPolicy& policy,
                                                 const McSettings& mc) {
    return check_stopped_bounds(field, x, A, k, t, policy, mc).level_change;
}

/// Geometric grid t0 * 2^j (j >= -6) kept strictly below min(1, 1/C^2).
inline std::vector<double> default_t_grid(double C) {
    const double t0 = t0_threshold(C);
    const double cap = C > 0.0 ? std::min(1.0, 1.0 / (C * C)) : 1.0;
    std::vector<double> grid;
    for (int j = -6; j <= 60; ++j) {
        const double t = std::ldexp(t0, j);
        if (t >= cap) break;
        grid.push_back(t);
    }
    return grid;
}

/// For each t in t_grid, the Wilson estimate of P[S_k <= t] against C sqrt(t),
/// C = markov_constant(m, K). Points with C sqrt(t) >= 1 are marked vacuous.
inline std::vector<BoundCheckReport> check_sqrt_escape_bound(const CoefficientField& field,
                                                             const Eigen::Ref<const Vector>& x, double A, int k,
                                                             const std::vector<double>& t_grid,
                                                             const StepPolicy& policy, const McSettings& mc) {
    detail::require_mc(mc, "check_sqrt_escape_bound");
    if (t_grid.empty()) throw invalid_input("check_sqrt_escape_bound: t_grid is empty");
    for (double t : t_grid)
        if (!(t > 0.0 && t <= 1.0)) throw invalid_input("check_sqrt_escape_bound: every t must lie in (0, 1]");
    if (k < 1) throw invalid_input("check_sqrt_escape_bound: k must be >= 1");
    require_start_level(level(field, x), A, k, "check_sqrt_escape_bound");

    const double C = markov_constant(field.noise_dim(), field.lipschitz_K());
    const double horizon = *std::max_element(t_grid.begin(), t_grid.end());
    const Vector start = x;
    std::vector<double> exit_time(mc.n_paths, std::numeric_limits<double>::infinity());
    const StopRule stop = detail::band_exit(A, k);

    for_each_path(mc.n_paths, mc.workers, [&](std::size_t i) {
        const PathRealization path = simulate_path(field, start, horizon, policy, stream_seed(mc.seed, i), stop);
        const LevelCrossing s = sandwich_time(path, field, A, k, mc.method);
        if (!s.censored) exit_time[i] = s.time;
    });

    std::vector<BoundCheckReport> out;
    for (double t : t_grid) {
        std::size_t hits = 0;
        for (double e : exit_time) hits += e <= t ? 1 : 0;
        BoundCheckReport r;
        r.bound_name = "sqrt_escape";
        r.lhs = estimate_with_ci(hits, mc.n_paths, CiMethod::wilson);
        r.lhs.censored_n = mc.n_paths - hits;
        r.rhs = C * std::sqrt(t);
        r.vacuous = r.rhs >= 1.0;
        r.parameters = detail::common_parameters(field, policy, mc);
        r.parameters["A"] = A;
        r.parameters["k"] = k;
        r.parameters["t"] = t;
        r.parameters["C"] = C;
        out.push_back(std::move(r));
    }
    return out;
}

/// Least-squares slope of log y on log x over points with x, y > 0.
inline std::optional<double> fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw invalid_input("fit_loglog_slope: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] > 0.0 && ys[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    if (lx.size() < 2) return std::nullopt;
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

/// Fitted exponent of P[S_k <= t] in t over the informative, nonzero points.
inline std::optional<double> fit_escape_exponent(const std::vector<BoundCheckReport>& reports) {
    std::vector<double> ts, ps;
    for (const auto& r : reports) {
        if (r.vacuous) continue;
        ts.push_back(r.parameters.at("t"));
        ps.push_back(r.lhs.point);
    }
    return fit_loglog_slope(ts, ps);
}

/// Estimates P[T_{A/2^(k+1)} >= t0] over paths started round-robin from
/// `starts` (each with level >= A/2^k); the bound requires at least 1/2.
inline BoundCheckReport check_halving_persistence(const CoefficientField& field, const std::vector<Vector>& starts,
                                                  double A, int k, double t0, const StepPolicy& policy,
                                                  const McSettings& mc) {
    detail::require_mc(mc, "check_halving_persistence");
    if (starts.empty()) throw invalid_input("check_halving_persistence: no start points");
    if (!(A > 0.0) || k < 0) throw invalid_input("check_halving_persistence: need A > 0 and k >= 0");
    if (!(t0 > 0.0 && t0 < 1.0)) throw invalid_input("check_halving_persistence: t0 must lie in (0, 1)");
    const double band = A / std::ldexp(1.0, k);
    const double target = A / std::ldexp(1.0, k + 1);
    for (const auto& s : starts)
        if (!(level(field, s) >= band * (1.0 - 1e-12)))
            throw invalid_input("check_halving_persistence: start point with level below A/2^k");

    std::vector<char> persisted(mc.n_paths, 0);
    const StopRule stop = [target](double, double l) { return l <= target; };
    for_each_path(mc.n_paths, mc.workers, [&](std::size_t i) {
        const PathRealization path =
            simulate_path(field, starts[i % starts.size()], t0, policy, stream_seed(mc.seed, i), stop);
        const LevelCrossing c = first_hitting_time(path, field, target, mc.method);
        persisted[i] = (c.censored || c.time >= t0) ? 1 : 0;
    });
    std::size_t hits = 0;
    for (char p : persisted) hits += p;

    BoundCheckReport r;
    r.bound_name = "halving_persistence";
    r.lhs = estimate_with_ci(hits, mc.n_paths, CiMethod::wilson);
    r.rhs = 0.5;
    r.sense = BoundSense::lower;
    r.parameters = detail::common_parameters(field, policy, mc);
    r.parameters["A"] = A;
    r.parameters["k"] = k;
    r.parameters["t0"] = t0;
    r.parameters["starts"] = static_cast<double>(starts.size());
    return r;
}

/// For each eps, the Wilson estimate of P[min over the grid of level(X) <= eps
/// before the horizon]. eps_grid must be strictly decreasing.
inline std::vector<EstimateWithCI> estimate_lambda_hitting(const CoefficientField& field,
                                                           const Eigen::Ref<const Vector>& start, double horizon,
                                                           const std::vector<double>& eps_grid,
                                                           const StepPolicy& policy, const McSettings& mc) {
    detail::require_mc(mc, "estimate_lambda_hitting");
    if (eps_grid.empty()) throw invalid_input("estimate_lambda_hitting: eps_grid is empty");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0)) throw invalid_input("estimate_lambda_hitting: eps must be > 0");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))
            throw invalid_input("estimate_lambda_hitting: eps_grid must be strictly decreasing");
    }
    if (in_lambda(field, start)) throw invalid_input("estimate_lambda_hitting: start lies in Lambda");

    const double smallest = eps_grid.back();
    const Vector x0 = start;
    std::vector<double> min_level(mc.n_paths, 0.0);
    const StopRule stop = [smallest](double, double l) { return l <= smallest; };
    for_each_path(mc.n_paths, mc.workers, [&](std::size_t i) {
        const PathRealization path = simulate_path(field, x0, horizon, policy, stream_seed(mc.seed, i), stop);
        min_level[i] = *std::min_element(path.levels.begin(), path.levels.end());
    });

    std::vector<EstimateWithCI> out;
    for (double eps : eps_grid) {
        std::size_t hits = 0;
        for (double l : min_level) hits += l <= eps ? 1 : 0;
        EstimateWithCI e = estimate_with_ci(hits, mc.n_paths, CiMethod::wilson);
        e.censored_n = mc.n_paths - hits;
        out.push_back(e);
    }
    return out;
}

/// One row of the strong-order study.
struct StrongErrorRow {
    double h = 0.0;
    EstimateWithCI error;
};

struct StrongOrderStudy {
    std::vector<StrongErrorRow> rows;
    std::optional<double> slope;
};

/// E|X_T^EM - X_T| for dX = s X dB against the exact x0 exp(-s^2 T/2 + s B_T),
/// where B_T is the sum of the increments the scheme consumed.
inline StrongOrderStudy strong_order_gbm(double scale, double x0, double horizon, const std::vector<double>& h_grid,
                                         const McSettings& mc) {
    detail::require_mc(mc, "strong_order_gbm");
    if (h_grid.empty()) throw invalid_input("strong_order_gbm: h_grid is empty");
    const CoefficientField field = gbm_field(scale).field;
    Vector start(1);
    start(0) = x0;
    StrongOrderStudy study;
    std::vector<double> hs, errs;
    for (std::size_t level_index = 0; level_index < h_grid.size(); ++level_index) {
        const double h = h_grid[level_index];
        if (!(h > 0.0 && h <= horizon)) throw invalid_input("strong_order_gbm: every h must lie in (0, horizon]");
        std::vector<double> err(mc.n_paths);
        const std::uint64_t level_seed = splitmix64(mc.seed + level_index);
        for_each_path(mc.n_paths, mc.workers, [&](std::size_t i) {
            const PathRealization path =
                simulate_path(field, start, horizon, StepPolicy::fixed(h), stream_seed(level_seed, i));
            const double b = path.brownian_at_end()(0);
            const double exact = x0 * std::exp(-0.5 * scale * scale * path.end_time() + scale * b);
            err[i] = std::abs(path.states.back() - exact);
        });
        study.rows.push_back({h, estimate_mean(err)});
        hs.push_back(h);
        errs.push_back(study.rows.back().error.point);
    }
    study.slope = fit_loglog_slope(hs, errs);
    return study;
}

}  // namespace inaccess
