#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "inaccess/coefficients.hpp"
#include "inaccess/constants.hpp"
#include "inaccess/sde_engine.hpp"

namespace inaccess {

enum class CrossingMethod { grid, interpolated, bridge_corrected };
enum class Direction { up, down };

inline const char* to_string(CrossingMethod m) {
    switch (m) {
        case CrossingMethod::grid: return "grid";
        case CrossingMethod::interpolated: return "interpolated";
        default: return "bridge-corrected";
    }
}
inline const char* to_string(Direction d) { return d == Direction::up ? "up" : "down"; }

/// First passage of the level function through `threshold`.
///
/// When censored, `time` is the end of the observation window (the horizon,
/// or the end of a path cut short by a stop rule). `step` and `fraction`
/// place the crossing at times[step] + fraction * (times[step+1] - times[step]).
struct LevelCrossing {
    static constexpr std::size_t no_step = static_cast<std::size_t>(-1);

    double threshold = 0.0;
    double time = 0.0;
    bool censored = false;
    Direction direction = Direction::down;
    CrossingMethod method = CrossingMethod::interpolated;
    std::size_t step = no_step;
    double fraction = 0.0;
};

namespace detail {

inline double observation_end(const PathRealization& path) {
    return path.end == PathEnd::stopped ? path.end_time() : path.horizon;
}

/// |d level / dx| * |sigma| at x for a 1-D field: the local volatility of the level process.
inline double level_volatility_1d(const CoefficientField& field, double x) {
    FieldWorkspace ws = field.workspace();
    Vector p(1);
    const double dx = 1e-6 * std::max(1.0, std::abs(x));
    p(0) = x + dx;
    const double up = field.evaluate(p, ws);
    p(0) = x - dx;
    const double down = field.evaluate(p, ws);
    p(0) = x;
    field.evaluate(p, ws);
    return std::abs((up - down) / (2.0 * dx)) * std::abs(ws.sigma(0, 0));
}

}  // namespace detail

/// T_A = inf{t >= 0 : level(X_t) = A} on the piecewise-linear level interpolant.
///
/// The bridge-corrected method (1-D fields only) also declares a crossing
/// inside a step whose endpoints both stay on the near side, with the
/// Brownian-bridge probability exp(-2 a b / (v^2 h)); a, b are the endpoint
/// distances to A and v the local volatility of the level. The uniform draw is
/// keyed by the path seed and step, so the result is a pure function of the path.
inline LevelCrossing first_hitting_time(const PathRealization& path, const CoefficientField& field, double A,
                                        CrossingMethod method = CrossingMethod::interpolated) {
    if (!(A > 0.0)) throw invalid_input("first_hitting_time: threshold must be > 0");
    if (path.size() == 0) throw invalid_input("first_hitting_time: empty path");
    if (method == CrossingMethod::bridge_corrected && (field.dim() != 1 || field.noise_dim() != 1))
        throw invalid_input("first_hitting_time: bridge correction needs a 1-D field");

    LevelCrossing out;
    out.threshold = A;
    out.method = method;
    const double l0 = path.levels[0];
    out.direction = l0 > A ? Direction::down : Direction::up;
    if (l0 == A) {
        out.step = 0;
        out.time = 0.0;
        return out;
    }
    const bool down = out.direction == Direction::down;
    auto far_side = [&](double l) { return down ? l <= A : l >= A; };

    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double la = path.levels[i];
        const double lb = path.levels[i + 1];
        const double ta = path.times[i];
        const double tb = path.times[i + 1];
        if (far_side(lb)) {
            out.step = i;
            if (method == CrossingMethod::grid) {
                out.fraction = 1.0;
                out.time = tb;
            } else {
                out.fraction = (A - la) / (lb - la);
                out.time = ta + out.fraction * (tb - ta);
                if (method == CrossingMethod::bridge_corrected) out.method = CrossingMethod::interpolated;
            }
            return out;
        }
        if (method == CrossingMethod::bridge_corrected) {
            const double v = detail::level_volatility_1d(field, path.states[i]);
            const double h = tb - ta;
            if (v > 0.0) {
                const double p = std::exp(-2.0 * std::abs(la - A) * std::abs(lb - A) / (v * v * h));
                if (hashed_uniform(path.seed, i, A) < p) {
                    out.step = i;
                    out.fraction = 0.5;
                    out.time = ta + 0.5 * h;
                    return out;
                }
            }
        }
    }
    out.censored = true;
    out.time = detail::observation_end(path);
    out.method = method;
    return out;
}

/// State of the path at a crossing, interpolated within the crossing step.
inline Vector crossing_state(const PathRealization& path, const LevelCrossing& c) {
    if (c.censored || c.step == LevelCrossing::no_step) return path.state(path.size() - 1);
    if (c.step + 1 >= path.size()) return path.state(c.step);
    return (1.0 - c.fraction) * path.state(c.step) + c.fraction * path.state(c.step + 1);
}

/// Checks that the path starts on the dyadic level A/2^k (5% relative tolerance).
inline void require_start_level(double start_level, double A, int k, const char* who) {
    if (!(A > 0.0)) throw invalid_input(std::string(who) + ": A must be > 0");
    if (k < 0) throw invalid_input(std::string(who) + ": k must be >= 0");
    const double target = A / std::ldexp(1.0, k);
    if (!(std::abs(start_level - target) <= 0.05 * target))
        throw invalid_input(std::string(who) + ": start level " + format_double(start_level) +
                            " is not within 5% of A/2^k = " + format_double(target));
}

/// S_k = T_{A/2^(k+1)} min T_{A/2^(k-1)} for a path started on level A/2^k.
/// Exact ties go to the lower threshold.
inline LevelCrossing sandwich_time(const PathRealization& path, const CoefficientField& field, double A, int k,
                                   CrossingMethod method = CrossingMethod::interpolated) {
    if (k < 1) throw invalid_input("sandwich_time: k must be >= 1");
    if (path.size() == 0) throw invalid_input("sandwich_time: empty path");
    require_start_level(path.levels[0], A, k, "sandwich_time");
    const LevelCrossing lower = first_hitting_time(path, field, A / std::ldexp(1.0, k + 1), method);
    const LevelCrossing upper = first_hitting_time(path, field, A / std::ldexp(1.0, k - 1), method);
    if (lower.censored && upper.censored) return lower;
    if (lower.censored) return upper;
    if (upper.censored) return lower;
    return upper.time < lower.time ? upper : lower;
}

/// Transit times between successive halvings of the level, starting from A = level(start).
struct DyadicEscapeRecord {
    double A = 0.0;
    std::vector<double> increments;
    std::vector<bool> censored;
    double t0 = 0.0;
    std::size_t count_ge_t0 = 0;
    std::uint64_t seed = 0;

    std::size_t depth() const noexcept { return increments.size(); }
    bool ge_t0(std::size_t k) const { return !censored[k] && increments[k] >= t0; }
};

/// Builds the record for one already-simulated path.
inline DyadicEscapeRecord dyadic_escape_from_path(const PathRealization& path, const CoefficientField& field,
                                                  int depth, double t0,
                                                  CrossingMethod method = CrossingMethod::interpolated) {
    if (depth < 1) throw invalid_input("dyadic_escape: depth must be >= 1");
    DyadicEscapeRecord rec;
    rec.A = path.levels[0];
    rec.t0 = t0;
    rec.seed = path.seed;
    rec.increments.assign(depth, std::numeric_limits<double>::quiet_NaN());
    rec.censored.assign(depth, true);
    double previous = 0.0;  // T_{A/2^0} = 0: the path starts on level A
    for (int k = 0; k < depth; ++k) {
        const LevelCrossing c = first_hitting_time(path, field, rec.A / std::ldexp(1.0, k + 1), method);
        if (c.censored) break;
        rec.increments[k] = c.time - previous;
        rec.censored[k] = false;
        previous = c.time;
    }
    for (int k = 0; k < depth; ++k)
        if (rec.ge_t0(k)) ++rec.count_ge_t0;
    return rec;
}

/// Simulates one path from `start` and records T_{A/2^(k+1)} - T_{A/2^k} for k < depth.
/// t0 comes from the field's Lipschitz bound via markov_constant and t0_threshold.
inline DyadicEscapeRecord dyadic_escape(const CoefficientField& field, const Eigen::Ref<const Vector>& start,
                                        int depth, double horizon, const StepPolicy& policy, std::uint64_t seed,
                                        CrossingMethod method = CrossingMethod::interpolated) {
    if (depth < 1) throw invalid_input("dyadic_escape: depth must be >= 1");
    const double A = level(field, start);
    if (A <= field.lambda_tol()) throw invalid_input("dyadic_escape: start lies in Lambda");
    const double t0 = t0_threshold(markov_constant(field.noise_dim(), field.lipschitz_K()));
    const double floor_level = A / std::ldexp(1.0, depth);
    const PathRealization path = simulate_path(field, start, horizon, policy, seed,
                                               [floor_level](double, double l) { return l <= floor_level; });
    return dyadic_escape_from_path(path, field, depth, t0, method);
}

/// CSV rows path_id, k, increment, censored, ge_t0; censored increments are left empty.
inline void write_dyadic_csv(const std::vector<DyadicEscapeRecord>& records, std::ostream& os) {
    os << "path_id,k,increment,censored,ge_t0\n";
    for (std::size_t p = 0; p < records.size(); ++p) {
        const auto& r = records[p];
        for (std::size_t k = 0; k < r.depth(); ++k) {
            os << p << ',' << k << ',' << (r.censored[k] ? std::string() : format_double(r.increments[k])) << ','
               << (r.censored[k] ? 1 : 0) << ',' << (r.ge_t0(k) ? 1 : 0) << '\n';
        }
    }
}

}  // namespace inaccess
