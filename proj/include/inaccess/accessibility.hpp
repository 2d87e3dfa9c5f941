#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "inaccess/errors.hpp"
#include "inaccess/sde_engine.hpp"

namespace inaccess {

struct IntegralWindow {
    int j = 0;
    double lo = 0.0;
    double hi = 0.0;
    double value = 0.0;
    double error = 0.0;
    double partial_sum = 0.0;
};

/// Verdict of the 1-D test: 0 is accessible for dX = sigma(X) dB iff the integral is finite.
struct AccessibilityResult {
    bool finite = false;
    double value = 0.0;           // partial sum plus geometric tail estimate when finite
    double error_estimate = 0.0;  // quadrature error plus tail estimate
    std::vector<IntegralWindow> windows;
};

struct AccessibilityOptions {
    int window_count = 12;          // J: windows inspected by the ratio test
    double rel_tol = 1e-10;         // stop once the tail estimate is this small relative to the sum
    int max_windows = 1000;
    double decay_margin = 1e-3;     // geometric decay means every ratio <= 1 - decay_margin
    double flat_margin = 1e-9;      // no decay means every ratio >= 1 - flat_margin
};

/// Integral of y / sigma(y)^2 over (0, a], summed over dyadic windows
/// [a/2^(j+1), a/2^j].
///
/// After J windows the ratios of successive window contributions decide:
/// all ratios clearly below 1 give a geometric tail (finite once the tail is
/// negligible), all ratios at or above 1 mean divergence. Mixed evidence keeps
/// going until max_windows, where the last ratios decide.
inline AccessibilityResult accessibility_integral_1d(const std::function<double(double)>& sigma, double a,
                                                     const AccessibilityOptions& opts = {}) {
    if (!(a > 0.0) || !std::isfinite(a)) throw invalid_input("accessibility_integral_1d: a must be > 0");
    if (opts.window_count < 2) throw invalid_input("accessibility_integral_1d: need at least 2 windows");
    if (opts.max_windows <= opts.window_count)
        throw invalid_input("accessibility_integral_1d: max_windows must exceed window_count");

    auto integrand = [&](double y) {
        const double s = sigma(y);
        if (!std::isfinite(s) || s == 0.0)
            throw invalid_input("accessibility_integral_1d: sigma vanishes or is non-finite at y = " +
                                format_double(y));
        return y / (s * s);
    };
    {
        const double s = sigma(a);
        if (!std::isfinite(s) || s == 0.0)
            throw invalid_input("accessibility_integral_1d: sigma vanishes at y = a");
    }

    AccessibilityResult out;
    double sum = 0.0;
    double quad_error = 0.0;
    const auto J = static_cast<std::size_t>(opts.window_count);

    auto ratio_extremes = [&](double& lo_ratio, double& hi_ratio) {
        lo_ratio = std::numeric_limits<double>::infinity();
        hi_ratio = 0.0;
        const auto& w = out.windows;
        for (std::size_t i = w.size() - J; i < w.size(); ++i) {
            const double r = w[i].value / w[i - 1].value;
            lo_ratio = std::min(lo_ratio, r);
            hi_ratio = std::max(hi_ratio, r);
        }
    };
    auto finish_finite = [&](double r) {
        const double tail = out.windows.back().value * r / (1.0 - r);
        out.finite = true;
        out.value = sum + tail;
        out.error_estimate = quad_error + tail;
        return out;
    };

    for (int j = 0; j < opts.max_windows; ++j) {
        const double hi = std::ldexp(a, -j);
        const double lo = std::ldexp(a, -(j + 1));
        if (!(lo > 0.0) || !std::isnormal(lo)) break;
        // Integrate over the fixed window [1, 2] via y = lo * s: the quadrature's
        // error test compares against an unscaled panel error, so tiny windows
        // would otherwise subdivide to full depth.
        double err = 0.0;
        const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            [&](double s) { return lo * integrand(lo * s); }, 1.0, 2.0, 15, 1e-12, &err);
        if (!std::isfinite(v)) throw invalid_input("accessibility_integral_1d: non-finite window integral");
        sum += v;
        quad_error += err;
        out.windows.push_back({j, lo, hi, v, err, sum});

        if (out.windows.size() <= J) continue;
        if (out.windows.back().value == 0.0) return finish_finite(0.0);
        double lo_ratio = 0.0, hi_ratio = 0.0;
        ratio_extremes(lo_ratio, hi_ratio);
        if (lo_ratio >= 1.0 - opts.flat_margin) {
            out.finite = false;
            out.value = sum;
            out.error_estimate = quad_error;
            return out;
        }
        if (hi_ratio <= 1.0 - opts.decay_margin) {
            const double tail = out.windows.back().value * hi_ratio / (1.0 - hi_ratio);
            if (tail <= opts.rel_tol * std::abs(sum)) return finish_finite(hi_ratio);
        }
    }

    double lo_ratio = 0.0, hi_ratio = 0.0;
    if (out.windows.size() > J) ratio_extremes(lo_ratio, hi_ratio);
    if (hi_ratio < 1.0 && out.windows.size() > J) return finish_finite(hi_ratio);
    out.finite = false;
    out.value = sum;
    out.error_estimate = quad_error;
    return out;
}

}  // namespace inaccess
