#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "inaccess/catalog.hpp"
#include "inaccess/sde_engine.hpp"
#include "inaccess/verification.hpp"

using namespace inaccess;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

CoefficientField drift_only(double c) { return constant_field(Matrix::Zero(1, 1), scalar(c)).field; }

}  // namespace

TEST(em_step, deterministic_euler) {
    const auto f = drift_only(3.0);
    EXPECT_EQ(em_step(f, scalar(0.5), 0.25, scalar(0.7))(0), 0.5 + 3.0 * 0.25);
}

TEST(em_step, no_motion) {
    EXPECT_EQ(em_step(gbm_field().field, scalar(1.7), 0.1, scalar(0.0))(0), 1.7);
}

TEST(em_step, gbm_step) { EXPECT_DOUBLE_EQ(em_step(gbm_field().field, scalar(1.0), 0.01, scalar(0.1))(0), 1.1); }

TEST(em_step, multidimensional) {
    const auto f = diag_linear_field(2).field;
    Vector x(2), dw(2);
    x << 1.0, -2.0;
    dw << 0.5, 0.25;
    const Vector y = em_step(f, x, 0.1, dw);
    EXPECT_DOUBLE_EQ(y(0), 1.0 + 1.0 * 0.5 - 1.0 * 0.1);
    EXPECT_DOUBLE_EQ(y(1), -2.0 + (-2.0) * 0.25 + 2.0 * 0.1);
}

TEST(em_step, errors) {
    const auto f = gbm_field().field;
    EXPECT_THROW(em_step(f, Vector::Zero(2), 0.1, scalar(0)), invalid_input);
    EXPECT_THROW(em_step(f, scalar(1), 0.1, Vector::Zero(2)), invalid_input);
    EXPECT_THROW(em_step(f, scalar(1), 0.0, scalar(0)), invalid_input);
    EXPECT_THROW(em_step(f, scalar(1), 0.1, scalar(NAN)), invalid_input);
}

TEST(simulate_path, pure_drift_grid) {
    const auto p = simulate_path(drift_only(1.0), scalar(0.0), 1.0, StepPolicy::fixed(0.25), 42);
    ASSERT_EQ(p.size(), 5u);
    const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(p.times[i], expected[i]);
        EXPECT_EQ(p.state(i)(0), expected[i]);
    }
    EXPECT_EQ(p.end, PathEnd::horizon);
    EXPECT_EQ(p.increments.size(), 4u);
}

TEST(simulate_path, drift_only_matches_deterministic_euler) {
    const auto f = linear_drift_field(2.0).field;
    const double h = 0.01;
    const auto p = simulate_path(f, scalar(1.5), 1.0, StepPolicy::fixed(h), 9);
    double x = 1.5;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double hi = p.times[i] - p.times[i - 1];
        x = x + (-2.0 * x) * hi;
        EXPECT_EQ(p.state(i)(0), x) << i;
    }
}

TEST(simulate_path, start_and_times) {
    const auto p = simulate_path(gbm_field().field, scalar(0.8), 0.3, StepPolicy::adaptive(1e-2, 1e-5, 0.05), 5);
    EXPECT_EQ(p.state(0)(0), 0.8);
    EXPECT_EQ(p.times.front(), 0.0);
    EXPECT_EQ(p.times.back(), 0.3);
    for (std::size_t i = 1; i < p.size(); ++i) EXPECT_GT(p.times[i], p.times[i - 1]);
    EXPECT_EQ(p.states.size(), p.size());
    EXPECT_EQ(p.increments.size(), p.steps());
}

TEST(simulate_path, adaptive_step_rule) {
    const StepPolicy policy = StepPolicy::adaptive(1e-2, 1e-6, 0.05);
    const auto p = simulate_path(gbm_field().field, scalar(0.5), 2.0, policy, 77);
    for (std::size_t i = 0; i + 2 < p.size(); ++i) {
        const double want = std::clamp(0.05 * p.levels[i] / (1 + p.levels[i]), 1e-6, 1e-2);
        EXPECT_NEAR(p.times[i + 1] - p.times[i], want, 1e-12 * (1 + p.times[i + 1]));
    }
}

TEST(simulate_path, reproducible_bit_for_bit) {
    const auto f = diag_linear_field(2).field;
    Vector x(2);
    x << 0.4, -1.1;
    const auto a = simulate_path(f, x, 1.0, StepPolicy(), 1234);
    const auto b = simulate_path(f, x, 1.0, StepPolicy(), 1234);
    EXPECT_EQ(a.times, b.times);
    EXPECT_EQ(a.states, b.states);
    EXPECT_EQ(a.increments, b.increments);
    EXPECT_EQ(a.levels, b.levels);
    const auto c = simulate_path(f, x, 1.0, StepPolicy(), 1235);
    EXPECT_NE(a.states, c.states);
}

TEST(simulate_path, increments_have_step_variance) {
    const auto p = simulate_path(constant_field(Matrix::Identity(2, 2), Vector::Zero(2)).field, Vector::Zero(2), 20.0,
                                 StepPolicy::adaptive(1e-3, 1e-3, 1.0), 31);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.steps(); ++i) {
        const double h = p.times[i + 1] - p.times[i];
        for (int j = 0; j < 2; ++j) {
            sum += p.increment(i)(j) * p.increment(i)(j) / h;
            ++n;
        }
    }
    const double mean = sum / n;
    EXPECT_NEAR(mean, 1.0, 4.0 * std::sqrt(2.0 / n));
}

// Oracle: X_T - x ~ N(0, T) exactly for constant sigma = 1, b = 0.
TEST(simulate_path, constant_sigma_terminal_law_chi_square) {
    const auto f = constant_field(Matrix::Identity(1, 1), scalar(0.0)).field;
    const double T = 0.5;
    const std::size_t n = 10000;
    const int bins = 20;
    boost::math::normal_distribution<double> law(0.0, std::sqrt(T));
    std::vector<double> edges;
    for (int b = 1; b < bins; ++b) edges.push_back(boost::math::quantile(law, double(b) / bins));
    std::vector<double> counts(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = simulate_path(f, scalar(2.0), T, StepPolicy::fixed(0.05), stream_seed(2024, i));
        const double z = p.states.back() - 2.0;
        counts[std::upper_bound(edges.begin(), edges.end(), z) - edges.begin()] += 1.0;
    }
    double chi2 = 0.0;
    const double expected = double(n) / bins;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double critical = boost::math::quantile(boost::math::chi_squared_distribution<double>(bins - 1), 0.99);
    EXPECT_LT(chi2, critical);
}

// Oracle: X_T = x exp(-T/2 + B_T) from the increments the scheme consumed.
TEST(simulate_path, gbm_strong_order_half) {
    McSettings mc;
    mc.n_paths = 1000;
    mc.seed = 8;
    const std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
    const auto study = strong_order_gbm(1.0, 1.0, 1.0, hs, mc);
    ASSERT_TRUE(study.slope.has_value());
    EXPECT_GE(*study.slope, 0.35);
    EXPECT_LE(*study.slope, 0.65);
    for (std::size_t i = 1; i < study.rows.size(); ++i)
        EXPECT_LT(study.rows[i].error.point, study.rows[i - 1].error.point);
}

TEST(simulate_path, absorption_in_lambda) {
    // b(x) = -2x with h = 1/2 lands exactly on 0.
    const auto f = linear_drift_field(2.0).field.with_lambda_tol(1e-12);
    const auto p = simulate_path(f, scalar(3.0), 5.0, StepPolicy::fixed(0.5), 1);
    EXPECT_EQ(p.end, PathEnd::absorbed);
    EXPECT_EQ(p.size(), 2u);
    EXPECT_EQ(p.state(1)(0), 0.0);
    EXPECT_EQ(p.state_at(4.0)(0), 0.0);

    const auto q = simulate_path(f, scalar(0.0), 5.0, StepPolicy::fixed(0.5), 1);
    EXPECT_EQ(q.end, PathEnd::absorbed);
    EXPECT_EQ(q.size(), 1u);
}

TEST(simulate_path, blowup_reports_step) {
    const auto f = linear_drift_field(-1e6).field;
    try {
        simulate_path(f, scalar(1.0), 10.0, StepPolicy::fixed(1.0), 3);
        FAIL() << "expected numerical_blowup";
    } catch (const numerical_blowup& e) {
        EXPECT_EQ(e.step(), 1u);
        EXPECT_EQ(e.seed(), 3u);
    }
}

TEST(simulate_path, invalid_inputs) {
    const auto f = gbm_field().field;
    EXPECT_THROW(simulate_path(f, scalar(1.0), 0.0, StepPolicy(), 1), invalid_input);
    EXPECT_THROW(simulate_path(f, scalar(NAN), 1.0, StepPolicy(), 1), invalid_input);
    EXPECT_THROW(simulate_path(f, Vector::Zero(2), 1.0, StepPolicy(), 1), invalid_input);
    EXPECT_THROW(simulate_path(f, scalar(1.0), 1.0, StepPolicy::adaptive(1e-3, 1e-2, 0.1), 1), invalid_input);
}

TEST(simulate_path, stop_rule_ends_early) {
    const auto p = simulate_path(drift_only(1.0), scalar(0.0), 10.0, StepPolicy::fixed(0.5), 1,
                                 [](double t, double) { return t >= 2.0; });
    EXPECT_EQ(p.end, PathEnd::stopped);
    EXPECT_EQ(p.end_time(), 2.0);
}

TEST(write_path_csv, columns) {
    const auto p = simulate_path(diag_linear_field(2).field, Vector::Constant(2, 1.0), 0.1, StepPolicy::fixed(0.05), 3);
    std::ostringstream os;
    write_path_csv(p, os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,x_1,x_2,level");
    std::getline(in, line);
    EXPECT_EQ(line, "0,1,1,4");
    std::size_t rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, p.size());
}

TEST(format_double, shortest_round_trip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1e-6), "1e-06");
    const double v = 0.1 + 0.2;
    EXPECT_EQ(std::stod(format_double(v)), v);
}
