#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include "inaccess/errors.hpp"

namespace inaccess {

enum class CiMethod { wilson, clopper_pearson, normal };

inline const char* to_string(CiMethod m) {
    switch (m) {
        case CiMethod::wilson: return "wilson";
        case CiMethod::clopper_pearson: return "clopper-pearson";
        default: return "normal";
    }
}

/// Point estimate with a two-sided confidence interval.
struct EstimateWithCI {
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n = 0;
    CiMethod method = CiMethod::wilson;
    std::size_t censored_n = 0;
};

inline double two_sided_z(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw invalid_input("confidence must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * confidence);
}

namespace detail {

inline EstimateWithCI wilson(std::size_t s, std::size_t n, double z) {
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(s) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    EstimateWithCI e;
    e.point = p;
    e.ci_low = s == 0 ? 0.0 : std::clamp(centre - half, 0.0, p);
    e.ci_high = s == n ? 1.0 : std::clamp(centre + half, p, 1.0);
    e.n = n;
    e.method = CiMethod::wilson;
    return e;
}

inline EstimateWithCI clopper_pearson(std::size_t s, std::size_t n, double confidence) {
    const double alpha = 1.0 - confidence;
    const double ds = static_cast<double>(s);
    const double dn = static_cast<double>(n);
    EstimateWithCI e;
    e.point = ds / dn;
    e.ci_low = s == 0 ? 0.0
                      : boost::math::quantile(boost::math::beta_distribution<double>(ds, dn - ds + 1.0), alpha / 2);
    e.ci_high = s == n ? 1.0
                       : boost::math::quantile(boost::math::beta_distribution<double>(ds + 1.0, dn - ds),
                                               1.0 - alpha / 2);
    e.n = n;
    e.method = CiMethod::clopper_pearson;
    return e;
}

}  // namespace detail

/// Binomial proportion estimate. The normal approximation is honoured only
/// when n p (1 - p) >= 10; otherwise the Wilson interval is returned and
/// `method` says so.
inline EstimateWithCI estimate_with_ci(std::size_t successes, std::size_t n, CiMethod method = CiMethod::wilson,
                                       double confidence = 0.95) {
    if (n < 1) throw invalid_input("estimate_with_ci: n must be >= 1");
    if (successes > n) throw invalid_input("estimate_with_ci: successes exceed n");
    const double z = two_sided_z(confidence);
    switch (method) {
        case CiMethod::clopper_pearson: return detail::clopper_pearson(successes, n, confidence);
        case CiMethod::normal: {
            const double p = static_cast<double>(successes) / static_cast<double>(n);
            if (static_cast<double>(n) * p * (1.0 - p) < 10.0) return detail::wilson(successes, n, z);
            const double half = z * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
            return {p, std::max(0.0, p - half), std::min(1.0, p + half), n, CiMethod::normal, 0};
        }
        default: return detail::wilson(successes, n, z);
    }
}

/// Sample mean with a normal-approximation interval.
inline EstimateWithCI estimate_mean(std::span<const double> samples, std::size_t censored_n = 0,
                                    double confidence = 0.95) {
    if (samples.empty()) throw invalid_input("estimate_mean: no samples");
    // Welford
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t k = 0;
    for (double v : samples) {
        ++k;
        const double delta = v - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (v - mean);
    }
    const double n = static_cast<double>(samples.size());
    const double var = samples.size() > 1 ? m2 / (n - 1.0) : 0.0;
    const double half = two_sided_z(confidence) * std::sqrt(var / n);
    return {mean, mean - half, mean + half, samples.size(), CiMethod::normal, censored_n};
}

}  // namespace inaccess
