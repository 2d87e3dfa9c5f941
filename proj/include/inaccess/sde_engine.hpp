#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "inaccess/coefficients.hpp"
#include "inaccess/rng.hpp"

namespace inaccess {

enum class StepKind { fixed, level_adaptive };

inline const char* to_string(StepKind k) { return k == StepKind::fixed ? "fixed" : "adaptive"; }

/// Step-size rule. The adaptive rule shrinks steps as the path nears Lambda:
/// h(x) = clamp(level_fraction * level(x) / (1 + level(x)), h_min, h_max).
struct StepPolicy {
    StepKind kind = StepKind::level_adaptive;
    double h_max = 1e-3;
    double h_min = 1e-7;
    double level_fraction = 1e-2;

    static StepPolicy fixed(double h) { return {StepKind::fixed, h, h, 1.0}; }
    static StepPolicy adaptive(double h_max, double h_min, double level_fraction) {
        return {StepKind::level_adaptive, h_max, h_min, level_fraction};
    }

    void validate() const {
        if (!(h_max > 0.0) || !std::isfinite(h_max)) throw invalid_input("step policy: h_max must be > 0");
        if (kind == StepKind::level_adaptive) {
            if (!(h_min > 0.0)) throw invalid_input("step policy: h_min must be > 0");
            if (h_min > h_max) throw invalid_input("step policy: h_min must not exceed h_max");
            if (!(level_fraction > 0.0)) throw invalid_input("step policy: level_fraction must be > 0");
        }
    }

    double step(double lvl) const {
        if (kind == StepKind::fixed) return h_max;
        return std::clamp(level_fraction * lvl / (1.0 + lvl), h_min, h_max);
    }

    bool operator==(const StepPolicy&) const = default;
};

enum class PathEnd { horizon, absorbed, stopped };

/// A discretized trajectory. States and increments are stored row-major.
///
/// A path ends at the horizon, when it enters Lambda (absorbed; it would stay
/// there forever), or when a caller-supplied stop rule fires. Past its last
/// grid time an absorbed path keeps its final state.
struct PathRealization {
    int d = 0;
    int m = 0;
    std::vector<double> times;
    std::vector<double> states;
    std::vector<double> levels;
    std::vector<double> increments;
    std::uint64_t seed = 0;
    StepPolicy step_policy;
    double horizon = 0.0;
    PathEnd end = PathEnd::horizon;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
    double end_time() const { return times.back(); }

    Eigen::Map<const Vector> state(std::size_t i) const { return {states.data() + i * d, d}; }
    Eigen::Map<const Vector> increment(std::size_t i) const { return {increments.data() + i * m, m}; }
    double level(std::size_t i) const { return levels[i]; }

    /// Linear interpolation of the state at time t (clamped to the path's span).
    Vector state_at(double t) const {
        if (t <= times.front()) return state(0);
        if (t >= times.back()) return state(size() - 1);
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
        const double w = (t - times[i]) / (times[i + 1] - times[i]);
        return (1.0 - w) * state(i) + w * state(i + 1);
    }

    Vector brownian_at_end() const {
        Vector b = Vector::Zero(m);
        for (std::size_t i = 0; i < steps(); ++i) b += increment(i);
        return b;
    }
};

/// Returns true to end the path after the state at (t, level) is recorded.
using StopRule = std::function<bool(double t, double level)>;

constexpr double blowup_threshold = 1e12;

/// One Euler-Maruyama step: x + sigma(x) dW + b(x) h.
inline Vector em_step(const CoefficientField& field, const Eigen::Ref<const Vector>& x, double h,
                      const Eigen::Ref<const Vector>& dW) {
    field.check_point(x);
    if (dW.size() != field.noise_dim())
        throw invalid_input("em_step: increment has dimension " + std::to_string(dW.size()) +
                            ", field expects " + std::to_string(field.noise_dim()));
    if (!(h > 0.0)) throw invalid_input("em_step: h must be > 0");
    if (!dW.allFinite()) throw invalid_input("em_step: increment has non-finite entries");
    FieldWorkspace ws = field.workspace();
    field.evaluate(x, ws);
    return x + ws.sigma * dW + ws.drift * h;
}

/// Simulates E_x(sigma, b) by Euler-Maruyama from `start` up to `horizon`.
inline PathRealization simulate_path(const CoefficientField& field, const Eigen::Ref<const Vector>& start,
                                     double horizon, const StepPolicy& policy, std::uint64_t seed,
                                     const StopRule& stop = {}) {
    field.check_point(start);
    if (!start.allFinite()) throw invalid_input("simulate_path: start has non-finite entries");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw invalid_input("simulate_path: horizon must be > 0");
    policy.validate();

    const int d = field.dim();
    const int m = field.noise_dim();
    PathRealization path;
    path.d = d;
    path.m = m;
    path.seed = seed;
    path.step_policy = policy;
    path.horizon = horizon;
    if (policy.kind == StepKind::fixed) {
        const double expected = std::min(horizon / policy.h_max + 2.0, double(1 << 20));
        path.times.reserve(static_cast<std::size_t>(expected));
        path.levels.reserve(static_cast<std::size_t>(expected));
        path.states.reserve(static_cast<std::size_t>(expected) * d);
        path.increments.reserve(static_cast<std::size_t>(expected) * m);
    }

    PathRng rng(seed);
    FieldWorkspace ws = field.workspace();
    Vector x = start;
    Vector next(d);
    Vector dW(m);
    const double tol = field.lambda_tol();
    const double end_slack = 1e-12 * horizon;

    double lvl = field.evaluate(x, ws);
    if (!std::isfinite(lvl)) throw numerical_blowup("simulate_path: non-finite coefficients at start", 0, seed);
    double t = 0.0;
    path.times.push_back(t);
    path.levels.push_back(lvl);
    path.states.insert(path.states.end(), x.data(), x.data() + d);
    if (lvl <= tol) {
        path.end = PathEnd::absorbed;
        return path;
    }

    for (std::size_t step = 0; t < horizon; ++step) {
        double t_next = policy.kind == StepKind::fixed ? double(step + 1) * policy.h_max
                                                       : t + policy.step(lvl);
        if (t_next >= horizon - end_slack) t_next = horizon;
        const double h = t_next - t;
        const double sqrt_h = std::sqrt(h);
        for (int j = 0; j < m; ++j) dW(j) = sqrt_h * rng.normal();

        next.noalias() = x + ws.sigma * dW + ws.drift * h;
        if (!next.allFinite() || next.cwiseAbs().maxCoeff() > blowup_threshold)
            throw numerical_blowup("simulate_path: state left the finite range at step " + std::to_string(step),
                                   step, seed);
        x.swap(next);
        t = t_next;
        lvl = field.evaluate(x, ws);
        if (!std::isfinite(lvl))
            throw numerical_blowup("simulate_path: non-finite coefficients at step " + std::to_string(step), step,
                                   seed);

        path.times.push_back(t);
        path.levels.push_back(lvl);
        path.states.insert(path.states.end(), x.data(), x.data() + d);
        path.increments.insert(path.increments.end(), dW.data(), dW.data() + m);

        if (lvl <= tol) {
            path.end = PathEnd::absorbed;
            break;
        }
        if (stop && stop(t, lvl)) {
            path.end = t >= horizon ? PathEnd::horizon : PathEnd::stopped;
            break;
        }
    }
    return path;
}

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Writes the path as CSV with columns t, x_1..x_d, level.
inline void write_path_csv(const PathRealization& path, std::ostream& os) {
    os << "t";
    for (int i = 1; i <= path.d; ++i) os << ",x_" << i;
    os << ",level\n";
    for (std::size_t k = 0; k < path.size(); ++k) {
        os << format_double(path.times[k]);
        for (int i = 0; i < path.d; ++i) os << ',' << format_double(path.states[k * path.d + i]);
        os << ',' << format_double(path.levels[k]) << '\n';
    }
}

}  // namespace inaccess
