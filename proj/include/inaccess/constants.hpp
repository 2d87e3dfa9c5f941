#pragma once

#include <cmath>

#include "inaccess/errors.hpp"

namespace inaccess {

/// The chain (2^(k+1)/A) * 2 (3A/2^k)^(1/2) * K * sqrt((m+1) (A/2^(k-1)) t)
/// bounding P_x[S_k <= t], evaluated term by term without simplification.
inline double escape_bound_product(int m, double K, double A, int k, double t) {
    const double level_k = A / std::ldexp(1.0, k);
    const double chebyshev = std::ldexp(1.0, k + 1) / A;
    const double lipschitz = 2.0 * std::sqrt(3.0 * level_k) * K;
    const double displacement = std::sqrt((m + 1) * (A / std::ldexp(1.0, k - 1)) * t);
    return chebyshev * lipschitz * displacement;
}

/// C in P_x[S_k <= t] <= C sqrt(t); the product above collapses to
/// 4 sqrt(6) K sqrt(m+1), free of A and k.
inline double markov_constant(int m, double K) {
    if (m < 1) throw invalid_input("markov_constant: m must be >= 1");
    if (!(K >= 0.0)) throw invalid_input("markov_constant: K must be >= 0");
    return 4.0 * std::sqrt(6.0) * K * std::sqrt(static_cast<double>(m + 1));
}

/// Largest t0 = min(1/(4 C^2), 1/2) with C sqrt(t0) <= 1/2 holding in floating point.
inline double t0_threshold(double C) {
    if (!(C >= 0.0)) throw invalid_input("t0_threshold: C must be >= 0");
    if (C == 0.0) return 0.5;
    double t0 = std::min(1.0 / (4.0 * C * C), 0.5);
    while (C * std::sqrt(t0) > 0.5) t0 = std::nextafter(t0, 0.0);
    return t0;
}

}  // namespace inaccess
