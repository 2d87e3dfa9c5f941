#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "inaccess/errors.hpp"

namespace inaccess {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// sigma(x) written into a preallocated d x m matrix.
using SigmaFn = std::function<void(const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix>)>;
/// b(x) written into a preallocated d-vector.
using DriftFn = std::function<void(const Eigen::Ref<const Vector>&, Eigen::Ref<Vector>)>;

enum class LipschitzSource { unknown, declared, estimated };

inline const char* to_string(LipschitzSource s) {
    switch (s) {
        case LipschitzSource::declared: return "declared";
        case LipschitzSource::estimated: return "estimated";
        default: return "unknown";
    }
}

/// Scratch storage for one evaluation of (sigma, b) at a point.
struct FieldWorkspace {
    Matrix sigma;
    Vector drift;
};

/// The coefficient pair (sigma, b) of dX = sigma(X) dB + b(X) dt.
///
/// Immutable after construction; the stored callables must be pure so one
/// field can be shared by every simulation worker.
class CoefficientField {
public:
    CoefficientField(int d, int m, SigmaFn sigma, DriftFn drift)
        : d_(d), m_(m), sigma_(std::move(sigma)), drift_(std::move(drift)) {
        if (d < 1 || m < 1) throw invalid_input("field dimensions must be positive");
        if (!sigma_ || !drift_) throw invalid_input("field needs both sigma and b");
    }

    int dim() const noexcept { return d_; }
    int noise_dim() const noexcept { return m_; }

    double lipschitz_K() const {
        if (k_source_ == LipschitzSource::unknown)
            throw invalid_input("field has no Lipschitz bound; declare or estimate one");
        return lipschitz_K_;
    }
    LipschitzSource lipschitz_source() const noexcept { return k_source_; }
    double lambda_tol() const noexcept { return lambda_tol_; }

    CoefficientField with_lipschitz(double K, LipschitzSource source) const {
        if (!(K >= 0.0) || !std::isfinite(K)) throw invalid_input("Lipschitz bound must be finite and >= 0");
        CoefficientField copy = *this;
        copy.lipschitz_K_ = K;
        copy.k_source_ = source;
        return copy;
    }

    CoefficientField with_lambda_tol(double tol) const {
        if (!(tol >= 0.0)) throw invalid_input("lambda_tol must be >= 0");
        CoefficientField copy = *this;
        copy.lambda_tol_ = tol;
        return copy;
    }

    FieldWorkspace workspace() const { return {Matrix::Zero(d_, m_), Vector::Zero(d_)}; }

    void check_point(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != d_)
            throw invalid_input("point has dimension " + std::to_string(x.size()) +
                                ", field expects " + std::to_string(d_));
    }

    /// Evaluates both coefficients into `ws` and returns the level
    /// ||sigma(x)||_F^2 + ||b(x)||^2. No dimension check; hot path.
    double evaluate(const Eigen::Ref<const Vector>& x, FieldWorkspace& ws) const {
        sigma_(x, ws.sigma);
        drift_(x, ws.drift);
        return ws.sigma.squaredNorm() + ws.drift.squaredNorm();
    }

    Matrix sigma(const Eigen::Ref<const Vector>& x) const {
        check_point(x);
        Matrix out = Matrix::Zero(d_, m_);
        sigma_(x, out);
        return out;
    }

    Vector drift(const Eigen::Ref<const Vector>& x) const {
        check_point(x);
        Vector out = Vector::Zero(d_);
        drift_(x, out);
        return out;
    }

private:
    int d_;
    int m_;
    SigmaFn sigma_;
    DriftFn drift_;
    double lipschitz_K_ = 0.0;
    LipschitzSource k_source_ = LipschitzSource::unknown;
    double lambda_tol_ = 1e-12;
};

inline double frobenius_norm(const Eigen::Ref<const Matrix>& M) {
    if (!M.allFinite()) throw invalid_input("frobenius_norm: matrix has non-finite entries");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < M.cols(); ++j)
        for (Eigen::Index i = 0; i < M.rows(); ++i) sum += M(i, j) * M(i, j);
    return std::sqrt(sum);
}

/// ||sigma(x)||_F^2 + ||b(x)||^2; zero exactly on the common zero set of sigma and b.
inline double level(const CoefficientField& field, const Eigen::Ref<const Vector>& x) {
    field.check_point(x);
    if (!x.allFinite()) throw invalid_input("level: point has non-finite entries");
    FieldWorkspace ws = field.workspace();
    return field.evaluate(x, ws);
}

inline bool in_lambda(const CoefficientField& field, const Eigen::Ref<const Vector>& x) {
    return level(field, x) <= field.lambda_tol();
}

/// Default membership tolerance for a scenario started at x0.
inline double default_lambda_tol(const CoefficientField& field, const Eigen::Ref<const Vector>& x0) {
    return 1e-12 * std::max(1.0, level(field, x0));
}

/// Axis-aligned sampling region.
struct Box {
    Vector lo;
    Vector hi;
};

/// Raw max of the sampled difference quotients, before any safety factor.
struct LipschitzSample {
    double max_quotient = 0.0;
    std::size_t pairs = 0;
};

/// Max over random pairs of max(||sigma(x)-sigma(y)||_F, ||b(x)-b(y)||) / ||x-y||.
///
/// Half of the pairs are uniform in the box; the other half are local pairs
/// y = x + small offset, which find steep regions that uniform pairs miss.
inline LipschitzSample sample_lipschitz(const CoefficientField& field, const Box& region,
                                        std::size_t samples, std::uint64_t seed) {
    const int d = field.dim();
    if (region.lo.size() != d || region.hi.size() != d)
        throw invalid_input("estimate_lipschitz: region dimension does not match field");
    if (samples < 2) throw invalid_input("estimate_lipschitz: need at least 2 samples");
    for (int i = 0; i < d; ++i)
        if (!(region.hi(i) > region.lo(i)))
            throw invalid_input("estimate_lipschitz: region has zero volume");

    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vector width = region.hi - region.lo;
    constexpr double local_scale = 1e-3;

    FieldWorkspace wx = field.workspace();
    FieldWorkspace wy = field.workspace();
    Vector x(d), y(d);
    LipschitzSample out;
    for (std::size_t s = 0; s < samples; ++s) {
        for (int i = 0; i < d; ++i) x(i) = region.lo(i) + width(i) * unit(gen);
        const bool local = (s % 2) == 1;
        for (int i = 0; i < d; ++i) {
            if (local) {
                const double off = (2.0 * unit(gen) - 1.0) * local_scale * width(i);
                y(i) = std::clamp(x(i) + off, region.lo(i), region.hi(i));
            } else {
                y(i) = region.lo(i) + width(i) * unit(gen);
            }
        }
        const double dist = (x - y).norm();
        if (dist == 0.0) continue;
        field.evaluate(x, wx);
        field.evaluate(y, wy);
        const double ds = (wx.sigma - wy.sigma).norm();
        const double db = (wx.drift - wy.drift).norm();
        out.max_quotient = std::max(out.max_quotient, std::max(ds, db) / dist);
        ++out.pairs;
    }
    return out;
}

inline double estimate_lipschitz(const CoefficientField& field, const Box& region,
                                 std::size_t samples, std::uint64_t seed,
                                 double safety_factor = 1.25) {
    if (!(safety_factor >= 1.0)) throw invalid_input("estimate_lipschitz: safety factor must be >= 1");
    return safety_factor * sample_lipschitz(field, region, samples, seed).max_quotient;
}

}  // namespace inaccess
