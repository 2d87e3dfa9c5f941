#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "inaccess/coefficients.hpp"

namespace inaccess {

struct FieldCatalogEntry {
    std::string name;
    CoefficientField field;
    std::string analytic_notes;
};

// Built-in fields. Each sets a declared Lipschitz bound.

/// sigma(x) = s x, b = 0: geometric Brownian motion, X_t = x exp(-s^2 t/2 + s B_t).
inline FieldCatalogEntry gbm_field(double scale = 1.0) {
    CoefficientField f(
        1, 1,
        [scale](const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) { out(0, 0) = scale * x(0); },
        [](const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) { out(0) = 0.0; });
    return {"gbm", f.with_lipschitz(std::abs(scale), LipschitzSource::declared),
            "sigma(x) = s*x, b = 0. Exact solution x*exp(-s^2 t/2 + s*B_t). K = |s|. Lambda = {0}; "
            "level(x) = s^2 x^2."};
}

/// sigma(y) = |y|^alpha, b = 0, extended by 0 at y = 0.
///
/// Not globally Lipschitz unless alpha == 1. The declared K is the sup of
/// |sigma'| over [k_lo, k_hi], a local bound only.
inline FieldCatalogEntry power_law_field(double alpha, double k_lo = 0.01, double k_hi = 10.0) {
    if (!(alpha > 0.0)) throw invalid_input("power_law: alpha must be > 0");
    if (!(k_lo > 0.0 && k_hi > k_lo)) throw invalid_input("power_law: need 0 < k_lo < k_hi");
    CoefficientField f(
        1, 1,
        [alpha](const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) {
            const double a = std::abs(x(0));
            out(0, 0) = a == 0.0 ? 0.0 : std::pow(a, alpha);
        },
        [](const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) { out(0) = 0.0; });
    const double K = alpha == 1.0 ? 1.0
                     : alpha < 1.0 ? alpha * std::pow(k_lo, alpha - 1.0)
                                   : alpha * std::pow(k_hi, alpha - 1.0);
    return {"power_law", f.with_lipschitz(K, LipschitzSource::declared),
            "sigma(y) = |y|^alpha, b = 0. Lambda = {0}. 0 is accessible iff alpha < 1 "
            "(integral of y*sigma^-2 near 0 is 1/(2-2 alpha) on (0,1]). "
            "Lipschitz only for alpha = 1; declared K is local to [k_lo, k_hi]."};
}

/// sigma(x) = diag(x), b(x) = -x on R^d.
inline FieldCatalogEntry diag_linear_field(int d = 2) {
    if (d < 1) throw invalid_input("diag_linear: d must be >= 1");
    CoefficientField f(
        d, d,
        [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) {
            out.setZero();
            out.diagonal() = x;
        },
        [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out = -x; });
    return {"diag_linear", f.with_lipschitz(1.0, LipschitzSource::declared),
            "sigma(x) = diag(x), b(x) = -x. Componentwise X_i(t) = x_i exp(-3t/2 + B_i(t)). "
            "K = 1. Lambda = {0}; level(x) = 2|x|^2."};
}

/// sigma = Sigma0, b = b0 everywhere; the level never changes.
inline FieldCatalogEntry constant_field(const Matrix& sigma0, const Vector& b0) {
    if (sigma0.rows() != b0.size()) throw invalid_input("constant: sigma rows must match b length");
    if (sigma0.rows() < 1 || sigma0.cols() < 1) throw invalid_input("constant: empty sigma");
    CoefficientField f(
        static_cast<int>(sigma0.rows()), static_cast<int>(sigma0.cols()),
        [sigma0](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out = sigma0; },
        [b0](const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) { out = b0; });
    return {"constant", f.with_lipschitz(0.0, LipschitzSource::declared),
            "sigma = Sigma0, b = b0. X_t = x + b0 t + Sigma0 B_t. K = 0. Lambda is empty unless "
            "Sigma0 = 0 and b0 = 0."};
}

/// sigma(x) = max(|x| - r, 0), b = 0: Lambda is the plateau [-r, r].
inline FieldCatalogEntry plateau_field(double radius = 1.0) {
    if (!(radius >= 0.0)) throw invalid_input("plateau: radius must be >= 0");
    CoefficientField f(
        1, 1,
        [radius](const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) {
            out(0, 0) = std::max(std::abs(x(0)) - radius, 0.0);
        },
        [](const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) { out(0) = 0.0; });
    return {"plateau", f.with_lipschitz(1.0, LipschitzSource::declared),
            "sigma(x) = max(|x| - r, 0), b = 0. Lambda = [-r, r]. From x > r, X - r is a "
            "geometric Brownian motion and never reaches the plateau. K = 1."};
}

/// sigma = 0, b(x) = -rate x in 1-D: level(t) = level(0) exp(-2 rate t).
inline FieldCatalogEntry linear_drift_field(double rate = 1.0) {
    CoefficientField f(
        1, 1, [](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out(0, 0) = 0.0; },
        [rate](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out(0) = -rate * x(0); });
    return {"linear_drift", f.with_lipschitz(std::abs(rate), LipschitzSource::declared),
            "sigma = 0, b(x) = -rate*x. Deterministic: x(t) = x exp(-rate t), level halves every "
            "ln(2)/(2 rate). K = |rate|. Lambda = {0}."};
}

namespace detail {

inline double param_number(const nlohmann::json& params, const std::string& key, double fallback,
                           const std::string& where) {
    if (!params.contains(key)) return fallback;
    const auto& v = params.at(key);
    if (!v.is_number()) throw invalid_input(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline Vector json_vector(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw invalid_input(where + ": expected a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw invalid_input(where + "[" + std::to_string(i) + "]: expected a number");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

inline Matrix json_matrix(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw invalid_input(where + ": expected a non-empty array of rows");
    const std::size_t rows = v.size();
    Vector first = json_vector(v[0], where + "[0]");
    Matrix out(static_cast<Eigen::Index>(rows), first.size());
    for (std::size_t i = 0; i < rows; ++i) {
        Vector row = json_vector(v[i], where + "[" + std::to_string(i) + "]");
        if (row.size() != first.size()) throw invalid_input(where + ": rows have different lengths");
        out.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return out;
}

inline void reject_unknown(const nlohmann::json& params, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = params.begin(); it != params.end(); ++it) {
        if (!allowed.count(it.key())) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw invalid_input(where + "." + it.key() + ": unknown parameter (allowed: " + list + ")");
        }
    }
}

}  // namespace detail

inline std::vector<std::string> catalog_names() {
    return {"constant", "diag_linear", "gbm", "linear_drift", "plateau", "power_law"};
}

/// Builds a catalog field from its name and a JSON object of numeric parameters.
/// `where` prefixes error messages with the config path of the parameter object.
inline FieldCatalogEntry make_field(const std::string& name, const nlohmann::json& params,
                                    const std::string& where = "field") {
    using detail::param_number;
    const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
    if (!p.is_object()) throw invalid_input(where + ": parameters must be an object");
    if (name == "gbm") {
        detail::reject_unknown(p, {"scale"}, where);
        return gbm_field(param_number(p, "scale", 1.0, where));
    }
    if (name == "power_law") {
        detail::reject_unknown(p, {"alpha", "k_lo", "k_hi"}, where);
        return power_law_field(param_number(p, "alpha", 0.5, where), param_number(p, "k_lo", 0.01, where),
                               param_number(p, "k_hi", 10.0, where));
    }
    if (name == "diag_linear") {
        detail::reject_unknown(p, {"d"}, where);
        const double d = param_number(p, "d", 2.0, where);
        if (d != std::floor(d) || d < 1) throw invalid_input(where + ".d: expected a positive integer");
        return diag_linear_field(static_cast<int>(d));
    }
    if (name == "constant") {
        detail::reject_unknown(p, {"sigma", "b"}, where);
        Matrix s = p.contains("sigma") ? detail::json_matrix(p.at("sigma"), where + ".sigma")
                                       : Matrix::Identity(1, 1);
        Vector b = p.contains("b") ? detail::json_vector(p.at("b"), where + ".b") : Vector::Zero(s.rows());
        if (b.size() != s.rows()) throw invalid_input(where + ".b: length must equal the rows of sigma");
        return constant_field(s, b);
    }
    if (name == "plateau") {
        detail::reject_unknown(p, {"radius"}, where);
        return plateau_field(param_number(p, "radius", 1.0, where));
    }
    if (name == "linear_drift") {
        detail::reject_unknown(p, {"rate"}, where);
        return linear_drift_field(param_number(p, "rate", 1.0, where));
    }
    std::string list;
    for (const auto& n : catalog_names()) list += (list.empty() ? "" : ", ") + n;
    throw invalid_input(where + ".name: unknown field '" + name + "' (known: " + list + ")");
}

/// Every catalog field with its default parameters.
inline std::vector<FieldCatalogEntry> catalog() {
    std::vector<FieldCatalogEntry> out;
    for (const auto& n : catalog_names()) out.push_back(make_field(n, nlohmann::json::object()));
    return out;
}

}  // namespace inaccess
