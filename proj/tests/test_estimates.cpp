#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "inaccess/estimates.hpp"

using namespace inaccess;

namespace {

double log_binom_pmf(std::size_t n, std::size_t k, double p) {
    if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
    if (p >= 1.0) return k == n ? 0.0 : -INFINITY;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
           (n - k) * std::log1p(-p);
}

double binom_cdf(std::size_t n, std::size_t s, double p) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= s; ++k) acc += std::exp(log_binom_pmf(n, k, p));
    return acc;
}

/// Exact coverage of an interval method at true proportion p, by enumerating outcomes.
double exact_coverage(std::size_t n, double p, CiMethod method) {
    double cover = 0.0;
    for (std::size_t s = 0; s <= n; ++s) {
        const auto e = estimate_with_ci(s, n, method);
        if (e.ci_low <= p && p <= e.ci_high) cover += std::exp(log_binom_pmf(n, s, p));
    }
    return cover;
}

}  // namespace

TEST(two_sided_z, standard_values) {
    EXPECT_NEAR(two_sided_z(0.95), 1.959963984540054, 1e-12);
    EXPECT_NEAR(two_sided_z(0.99), 2.5758293035489, 1e-12);
    EXPECT_THROW(two_sided_z(1.0), invalid_input);
    EXPECT_THROW(two_sided_z(0.0), invalid_input);
}

TEST(wilson, zero_successes) {
    const double z = two_sided_z(0.95);
    const auto e = estimate_with_ci(0, 50);
    EXPECT_EQ(e.point, 0.0);
    EXPECT_EQ(e.ci_low, 0.0);
    EXPECT_NEAR(e.ci_high, z * z / (50 + z * z), 1e-14);
}

TEST(wilson, all_successes) {
    const double z = two_sided_z(0.95);
    const auto e = estimate_with_ci(50, 50);
    EXPECT_EQ(e.ci_high, 1.0);
    EXPECT_NEAR(e.ci_low, 50 / (50 + z * z), 1e-14);
}

TEST(wilson, half) {
    const auto e = estimate_with_ci(50, 100);
    EXPECT_EQ(e.point, 0.5);
    EXPECT_NEAR(0.5 - e.ci_low, e.ci_high - 0.5, 1e-14);
    const double z = two_sided_z(0.95);
    // p = 1/2: centre stays at 1/2, half-width z sqrt(1/(4n) + z^2/(4n^2)) / (1 + z^2/n)
    EXPECT_NEAR(e.ci_high - 0.5, z * std::sqrt(0.0025 + z * z / 40000) / (1 + z * z / 100), 1e-14);
}

TEST(wilson, mirror_symmetry_and_containment) {
    for (std::size_t n : {1u, 7u, 40u, 1000u}) {
        for (std::size_t s = 0; s <= n; s += 1 + n / 13) {
            const auto a = estimate_with_ci(s, n);
            const auto b = estimate_with_ci(n - s, n);
            EXPECT_NEAR(a.ci_low, 1.0 - b.ci_high, 1e-12);
            EXPECT_NEAR(a.ci_high, 1.0 - b.ci_low, 1e-12);
            EXPECT_LE(a.ci_low, a.point);
            EXPECT_GE(a.ci_high, a.point);
            EXPECT_GE(a.ci_low, 0.0);
            EXPECT_LE(a.ci_high, 1.0);
        }
    }
}

TEST(wilson, narrows_with_n) {
    double prev = 1.0;
    for (std::size_t n : {10u, 100u, 1000u, 10000u}) {
        const auto e = estimate_with_ci(3 * n / 10, n);
        EXPECT_LT(e.ci_high - e.ci_low, prev);
        prev = e.ci_high - e.ci_low;
    }
}

// Oracle: the Clopper-Pearson limits solve binomial tail equations; check
// them by direct summation of the pmf.
TEST(clopper_pearson, binomial_tail_equations) {
    for (auto [s, n] : {std::pair<std::size_t, std::size_t>{3, 20}, {17, 40}, {1, 200}, {99, 100}}) {
        const auto e = estimate_with_ci(s, n, CiMethod::clopper_pearson);
        EXPECT_NEAR(binom_cdf(n, s, e.ci_high), 0.025, 1e-9) << s << "/" << n;
        EXPECT_NEAR(1.0 - binom_cdf(n, s - 1, e.ci_low), 0.025, 1e-9) << s << "/" << n;
    }
    const auto zero = estimate_with_ci(0, 30, CiMethod::clopper_pearson);
    EXPECT_EQ(zero.ci_low, 0.0);
    EXPECT_NEAR(zero.ci_high, 1.0 - std::pow(0.025, 1.0 / 30), 1e-12);
}

TEST(clopper_pearson, conservative_coverage) {
    for (double p : {0.05, 0.3, 0.5})
        EXPECT_GE(exact_coverage(100, p, CiMethod::clopper_pearson), 0.95) << p;
}

TEST(wilson, exact_coverage_near_nominal) {
    const double c = exact_coverage(200, 0.3, CiMethod::wilson);
    EXPECT_GE(c, 0.93);
    EXPECT_LE(c, 0.97);
}

TEST(wilson, simulated_coverage) {
    std::mt19937_64 gen(12);
    std::binomial_distribution<std::size_t> bin(200, 0.3);
    std::size_t covered = 0;
    const std::size_t batches = 1000;
    for (std::size_t b = 0; b < batches; ++b) {
        const auto e = estimate_with_ci(bin(gen), 200);
        covered += (e.ci_low <= 0.3 && 0.3 <= e.ci_high) ? 1 : 0;
    }
    EXPECT_GE(covered, 930u);
    EXPECT_LE(covered, 970u);
}

TEST(normal_interval, used_when_well_populated) {
    const auto e = estimate_with_ci(300, 1000, CiMethod::normal);
    EXPECT_EQ(e.method, CiMethod::normal);
    EXPECT_NEAR(e.ci_high - 0.3, two_sided_z(0.95) * std::sqrt(0.3 * 0.7 / 1000), 1e-14);
}

TEST(normal_interval, falls_back_to_wilson) {
    const auto e = estimate_with_ci(2, 100, CiMethod::normal);
    EXPECT_EQ(e.method, CiMethod::wilson);
    const auto w = estimate_with_ci(2, 100);
    EXPECT_EQ(e.ci_low, w.ci_low);
    EXPECT_EQ(e.ci_high, w.ci_high);
}

TEST(estimate_with_ci, errors) {
    EXPECT_THROW(estimate_with_ci(0, 0), invalid_input);
    EXPECT_THROW(estimate_with_ci(5, 4), invalid_input);
    EXPECT_THROW(estimate_with_ci(1, 4, CiMethod::wilson, 1.5), invalid_input);
}

TEST(estimate_mean, known_sample) {
    const std::vector<double> v{1, 2, 3, 4};
    const auto e = estimate_mean(v, 2);
    EXPECT_DOUBLE_EQ(e.point, 2.5);
    EXPECT_NEAR(e.ci_high - e.point, two_sided_z(0.95) * std::sqrt((5.0 / 3.0) / 4.0), 1e-14);
    EXPECT_EQ(e.n, 4u);
    EXPECT_EQ(e.censored_n, 2u);
}

TEST(estimate_mean, constant_sample_has_zero_width) {
    const std::vector<double> v(10, 0.7);
    const auto e = estimate_mean(v);
    EXPECT_DOUBLE_EQ(e.ci_low, 0.7);
    EXPECT_DOUBLE_EQ(e.ci_high, 0.7);
    EXPECT_THROW(estimate_mean(std::vector<double>{}), invalid_input);
}
