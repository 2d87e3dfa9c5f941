#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "inaccess/catalog.hpp"
#include "inaccess/constants.hpp"
#include "inaccess/sde_engine.hpp"
#include "inaccess/stopping_times.hpp"
#include "inaccess/verification.hpp"

namespace inaccess {

enum class Experiment {
    hitting,
    sqrt_bound,
    displacement,
    level_change,
    persistence,
    dyadic_escape,
    integral_1d,
    engine_validation
};

inline const std::vector<std::pair<Experiment, std::string>>& experiment_names() {
    static const std::vector<std::pair<Experiment, std::string>> names{
        {Experiment::hitting, "hitting"},
        {Experiment::sqrt_bound, "sqrt-bound"},
        {Experiment::displacement, "displacement"},
        {Experiment::level_change, "level-change"},
        {Experiment::persistence, "persistence"},
        {Experiment::dyadic_escape, "dyadic-escape"},
        {Experiment::integral_1d, "integral-1d"},
        {Experiment::engine_validation, "engine-validation"}};
    return names;
}

inline std::string to_string(Experiment e) {
    for (const auto& [k, v] : experiment_names())
        if (k == e) return v;
    return "?";
}

constexpr int scenario_schema_version = 1;

struct LipschitzSetting {
    bool estimate = false;
    Vector region_lo;
    Vector region_hi;
    std::size_t samples = 20000;
    std::uint64_t seed = 0;
};

/// A fully validated experiment description with every default filled in.
struct ScenarioConfig {
    Experiment experiment = Experiment::hitting;
    std::string field_name;
    nlohmann::json field_params = nlohmann::json::object();
    CoefficientField field = gbm_field().field;
    LipschitzSetting lipschitz;
    std::optional<Vector> start;
    double horizon = 1.0;
    StepPolicy policy;
    std::size_t n_paths = 0;
    std::uint64_t master_seed = 0;
    std::size_t min_paths = 100;
    CrossingMethod crossing = CrossingMethod::interpolated;

    // experiment parameters; only the ones the experiment uses are meaningful
    double A = 0.0;
    int k = 0;
    double t = 0.0;
    double t0 = 0.0;
    int depth = 0;
    double a = 1.0;
    std::vector<double> t_grid;
    std::vector<double> eps_grid;
    std::vector<double> h_grid;
    std::vector<Vector> starts;

    /// Normalized echo of the configuration, defaults included.
    nlohmann::json echo() const;
};

namespace detail {

inline std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            const std::string path = where.empty() ? it.key() : where + "." + it.key();
            throw invalid_input(path + ": unknown key (allowed: " +
                                join(std::vector<std::string>(allowed.begin(), allowed.end())) + ")");
        }
    }
}

inline const nlohmann::json& require_key(const nlohmann::json& obj, const std::string& key,
                                         const std::string& where) {
    if (!obj.contains(key))
        throw invalid_input((where.empty() ? key : where + "." + key) + ": missing required parameter");
    return obj.at(key);
}

inline double get_number(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number()) throw invalid_input(path + ": expected a number");
    return v.get<double>();
}

inline double get_positive(const nlohmann::json& v, const std::string& path) {
    const double x = get_number(v, path);
    if (!(x > 0.0) || !std::isfinite(x)) throw invalid_input(path + ": expected a positive number");
    return x;
}

inline std::uint64_t get_count(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw invalid_input(path + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::vector<double> get_positive_list(const nlohmann::json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw invalid_input(path + ": expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_positive(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline nlohmann::json vector_json(const Vector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace detail

/// Parses and validates a scenario document. Errors name the offending key path.
inline ScenarioConfig parse_scenario(const nlohmann::json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw invalid_input("config: expected a JSON object");
    reject_unknown_keys(doc,
                        {"schema_version", "experiment", "field", "start", "horizon", "policy", "n_paths",
                         "master_seed", "min_paths", "crossing", "lipschitz", "parameters"},
                        "");

    const auto& version = require_key(doc, "schema_version", "");
    if (!version.is_number_integer() || version.get<int>() != scenario_schema_version)
        throw invalid_input("schema_version: expected " + std::to_string(scenario_schema_version));

    ScenarioConfig cfg;
    {
        const auto& e = require_key(doc, "experiment", "");
        std::vector<std::string> valid;
        bool found = false;
        for (const auto& [kind, name] : experiment_names()) {
            valid.push_back(name);
            if (e.is_string() && e.get<std::string>() == name) {
                cfg.experiment = kind;
                found = true;
            }
        }
        if (!found)
            throw invalid_input("experiment: unknown experiment " + e.dump() + " (valid: " + join(valid) + ")");
    }
    const Experiment ex = cfg.experiment;

    {
        const auto& f = require_key(doc, "field", "");
        if (!f.is_object()) throw invalid_input("field: expected an object with 'name' and optional 'params'");
        reject_unknown_keys(f, {"name", "params"}, "field");
        const auto& name = require_key(f, "name", "field");
        if (!name.is_string()) throw invalid_input("field.name: expected a string");
        cfg.field_name = name.get<std::string>();
        if (f.contains("params")) cfg.field_params = f.at("params");
        cfg.field = make_field(cfg.field_name, cfg.field_params, "field.params").field;
        if (!cfg.field_params.is_object()) cfg.field_params = nlohmann::json::object();
    }

    if (doc.contains("lipschitz")) {
        const auto& l = doc.at("lipschitz");
        if (!l.is_object()) throw invalid_input("lipschitz: expected an object");
        reject_unknown_keys(l, {"mode", "region_lo", "region_hi", "samples", "seed"}, "lipschitz");
        const std::string mode = l.value("mode", std::string("declared"));
        if (mode != "declared" && mode != "estimated")
            throw invalid_input("lipschitz.mode: expected 'declared' or 'estimated'");
        cfg.lipschitz.estimate = mode == "estimated";
        if (cfg.lipschitz.estimate) {
            cfg.lipschitz.region_lo = json_vector(require_key(l, "region_lo", "lipschitz"), "lipschitz.region_lo");
            cfg.lipschitz.region_hi = json_vector(require_key(l, "region_hi", "lipschitz"), "lipschitz.region_hi");
            if (cfg.lipschitz.region_lo.size() != cfg.field.dim() || cfg.lipschitz.region_hi.size() != cfg.field.dim())
                throw invalid_input("lipschitz.region_lo: dimension mismatch with the field");
            if (l.contains("samples")) cfg.lipschitz.samples = get_count(l.at("samples"), "lipschitz.samples");
            if (l.contains("seed")) cfg.lipschitz.seed = get_count(l.at("seed"), "lipschitz.seed");
            const double K = estimate_lipschitz(cfg.field, {cfg.lipschitz.region_lo, cfg.lipschitz.region_hi},
                                                cfg.lipschitz.samples, cfg.lipschitz.seed);
            cfg.field = cfg.field.with_lipschitz(K, LipschitzSource::estimated);
        }
    }

    const bool needs_start = ex != Experiment::integral_1d && ex != Experiment::engine_validation;
    if (doc.contains("start")) {
        Vector s = json_vector(doc.at("start"), "start");
        if (s.size() != cfg.field.dim())
            throw invalid_input("start: dimension mismatch (got " + std::to_string(s.size()) + ", field '" +
                                cfg.field_name + "' has d = " + std::to_string(cfg.field.dim()) + ")");
        cfg.start = s;
    } else if (needs_start) {
        throw invalid_input("start: missing required parameter");
    }
    if (ex == Experiment::engine_validation && !cfg.start) cfg.start = Vector::Constant(1, 1.0);

    const bool needs_horizon = ex == Experiment::hitting || ex == Experiment::dyadic_escape;
    if (doc.contains("horizon"))
        cfg.horizon = get_positive(doc.at("horizon"), "horizon");
    else if (needs_horizon)
        throw invalid_input("horizon: missing required parameter");

    if (doc.contains("policy")) {
        const auto& p = doc.at("policy");
        if (!p.is_object()) throw invalid_input("policy: expected an object");
        reject_unknown_keys(p, {"kind", "h", "h_max", "h_min", "level_fraction"}, "policy");
        const std::string kind = p.value("kind", std::string("adaptive"));
        if (kind == "fixed") {
            if (p.contains("h_min") || p.contains("level_fraction"))
                throw invalid_input("policy: h_min and level_fraction apply only to the adaptive policy");
            const double h = p.contains("h") ? get_positive(p.at("h"), "policy.h")
                                             : get_positive(require_key(p, "h_max", "policy"), "policy.h_max");
            cfg.policy = StepPolicy::fixed(h);
        } else if (kind == "adaptive") {
            if (p.contains("h")) throw invalid_input("policy.h: use h_max for the adaptive policy");
            StepPolicy sp;
            if (p.contains("h_max")) sp.h_max = get_positive(p.at("h_max"), "policy.h_max");
            if (p.contains("h_min")) sp.h_min = get_positive(p.at("h_min"), "policy.h_min");
            if (p.contains("level_fraction"))
                sp.level_fraction = get_positive(p.at("level_fraction"), "policy.level_fraction");
            if (sp.h_min > sp.h_max) throw invalid_input("policy.h_min: must not exceed h_max");
            cfg.policy = sp;
        } else {
            throw invalid_input("policy.kind: expected 'fixed' or 'adaptive'");
        }
    }

    if (doc.contains("crossing")) {
        const auto& c = doc.at("crossing");
        const std::string s = c.is_string() ? c.get<std::string>() : "";
        if (s == "grid") cfg.crossing = CrossingMethod::grid;
        else if (s == "interpolated") cfg.crossing = CrossingMethod::interpolated;
        else if (s == "bridge-corrected") cfg.crossing = CrossingMethod::bridge_corrected;
        else throw invalid_input("crossing: expected 'grid', 'interpolated' or 'bridge-corrected'");
        if (cfg.crossing == CrossingMethod::bridge_corrected && cfg.field.dim() != 1)
            throw invalid_input("crossing: bridge correction needs a 1-D field");
    }

    if (doc.contains("min_paths")) cfg.min_paths = get_count(doc.at("min_paths"), "min_paths");
    if (ex != Experiment::integral_1d) {
        cfg.n_paths = get_count(require_key(doc, "n_paths", ""), "n_paths");
        if (cfg.n_paths < 1) throw invalid_input("n_paths: must be >= 1");
        if (cfg.n_paths < cfg.min_paths)
            throw invalid_input("n_paths: " + std::to_string(cfg.n_paths) + " is below the floor min_paths = " +
                                std::to_string(cfg.min_paths));
        cfg.master_seed = get_count(require_key(doc, "master_seed", ""), "master_seed");
    } else {
        if (doc.contains("n_paths")) cfg.n_paths = get_count(doc.at("n_paths"), "n_paths");
        if (doc.contains("master_seed")) cfg.master_seed = get_count(doc.at("master_seed"), "master_seed");
    }

    if (cfg.start) cfg.field = cfg.field.with_lambda_tol(default_lambda_tol(cfg.field, *cfg.start));

    // experiment parameters
    const nlohmann::json params = doc.contains("parameters") ? doc.at("parameters") : nlohmann::json::object();
    if (!params.is_object()) throw invalid_input("parameters: expected an object");
    const std::string P = "parameters";
    auto get_k = [&](bool required, int fallback, int min_k) {
        if (!params.contains("k")) {
            if (required) throw invalid_input("parameters.k: missing required parameter");
            return fallback;
        }
        const auto& v = params.at("k");
        if (!v.is_number_integer() || v.get<int>() < min_k)
            throw invalid_input("parameters.k: expected an integer >= " + std::to_string(min_k));
        return v.get<int>();
    };
    auto start_level = [&] { return level(cfg.field, *cfg.start); };
    auto default_A = [&] { return params.contains("A") ? get_positive(params.at("A"), "parameters.A")
                                                       : start_level() * std::ldexp(1.0, cfg.k); };
    const double C = cfg.field.lipschitz_source() == LipschitzSource::unknown
                         ? 0.0
                         : markov_constant(cfg.field.noise_dim(), cfg.field.lipschitz_K());

    switch (ex) {
        case Experiment::hitting:
            reject_unknown_keys(params, {"eps_grid"}, P);
            cfg.eps_grid = get_positive_list(require_key(params, "eps_grid", P), "parameters.eps_grid");
            for (std::size_t i = 1; i < cfg.eps_grid.size(); ++i)
                if (!(cfg.eps_grid[i] < cfg.eps_grid[i - 1]))
                    throw invalid_input("parameters.eps_grid: must be strictly decreasing");
            if (in_lambda(cfg.field, *cfg.start)) throw invalid_input("start: lies in Lambda");
            break;
        case Experiment::sqrt_bound:
            reject_unknown_keys(params, {"A", "k", "t_grid"}, P);
            cfg.k = get_k(true, 1, 1);
            cfg.A = default_A();
            cfg.t_grid = params.contains("t_grid") ? get_positive_list(params.at("t_grid"), "parameters.t_grid")
                                                   : default_t_grid(C);
            for (double t : cfg.t_grid)
                if (t > 1.0) throw invalid_input("parameters.t_grid: every t must be <= 1");
            require_start_level(start_level(), cfg.A, cfg.k, "start");
            break;
        case Experiment::displacement:
        case Experiment::level_change:
            reject_unknown_keys(params, {"A", "k", "t"}, P);
            cfg.k = get_k(true, 1, 1);
            cfg.A = default_A();
            cfg.t = get_positive(require_key(params, "t", P), "parameters.t");
            if (cfg.t > 1.0) throw invalid_input("parameters.t: must be <= 1");
            require_start_level(start_level(), cfg.A, cfg.k, "start");
            break;
        case Experiment::persistence: {
            reject_unknown_keys(params, {"A", "k", "t0", "starts"}, P);
            cfg.k = get_k(false, 0, 0);
            cfg.A = default_A();
            cfg.t0 = params.contains("t0") ? get_positive(params.at("t0"), "parameters.t0") : t0_threshold(C);
            if (cfg.t0 >= 1.0) throw invalid_input("parameters.t0: must be < 1");
            if (params.contains("starts")) {
                const auto& s = params.at("starts");
                if (!s.is_array() || s.empty()) throw invalid_input("parameters.starts: expected a non-empty array");
                for (std::size_t i = 0; i < s.size(); ++i) {
                    const std::string path = "parameters.starts[" + std::to_string(i) + "]";
                    Vector v = json_vector(s[i], path);
                    if (v.size() != cfg.field.dim()) throw invalid_input(path + ": dimension mismatch");
                    cfg.starts.push_back(v);
                }
            } else {
                cfg.starts.push_back(*cfg.start);
            }
            break;
        }
        case Experiment::dyadic_escape:
            reject_unknown_keys(params, {"depth"}, P);
            {
                const auto& v = require_key(params, "depth", P);
                if (!v.is_number_integer() || v.get<int>() < 1)
                    throw invalid_input("parameters.depth: expected a positive integer");
                cfg.depth = v.get<int>();
            }
            if (in_lambda(cfg.field, *cfg.start)) throw invalid_input("start: lies in Lambda");
            if (cfg.field.lipschitz_source() == LipschitzSource::unknown)
                throw invalid_input("field: dyadic-escape needs a Lipschitz bound");
            break;
        case Experiment::integral_1d:
            reject_unknown_keys(params, {"a"}, P);
            if (cfg.field.dim() != 1 || cfg.field.noise_dim() != 1)
                throw invalid_input("field: integral-1d needs a 1-D field");
            cfg.a = params.contains("a") ? get_positive(params.at("a"), "parameters.a") : 1.0;
            break;
        case Experiment::engine_validation:
            reject_unknown_keys(params, {"h_grid"}, P);
            if (cfg.field_name != "gbm")
                throw invalid_input("field.name: engine-validation needs the closed-form 'gbm' field");
            if (params.contains("h_grid")) {
                cfg.h_grid = get_positive_list(params.at("h_grid"), "parameters.h_grid");
            } else {
                for (int e = 4; e <= 10; ++e) cfg.h_grid.push_back(std::ldexp(1.0, -e));
            }
            for (double h : cfg.h_grid)
                if (h > cfg.horizon) throw invalid_input("parameters.h_grid: every h must be <= horizon");
            break;
    }
    return cfg;
}

inline ScenarioConfig parse_scenario(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw invalid_input(std::string("config: malformed JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

inline nlohmann::json ScenarioConfig::echo() const {
    using detail::vector_json;
    nlohmann::json j;
    j["schema_version"] = scenario_schema_version;
    j["experiment"] = to_string(experiment);
    j["field"] = {{"name", field_name}, {"params", field_params}};
    j["field_lipschitz_K"] = field.lipschitz_source() == LipschitzSource::unknown ? nlohmann::json(nullptr)
                                                                                 : nlohmann::json(field.lipschitz_K());
    j["field_lipschitz_source"] = to_string(field.lipschitz_source());
    j["lambda_tol"] = field.lambda_tol();
    if (start) j["start"] = vector_json(*start);
    j["horizon"] = horizon;
    if (policy.kind == StepKind::fixed)
        j["policy"] = {{"kind", "fixed"}, {"h", policy.h_max}};
    else
        j["policy"] = {{"kind", "adaptive"},
                       {"h_max", policy.h_max},
                       {"h_min", policy.h_min},
                       {"level_fraction", policy.level_fraction}};
    j["n_paths"] = n_paths;
    j["master_seed"] = master_seed;
    j["min_paths"] = min_paths;
    j["crossing"] = to_string(crossing);
    nlohmann::json p = nlohmann::json::object();
    switch (experiment) {
        case Experiment::hitting: p["eps_grid"] = eps_grid; break;
        case Experiment::sqrt_bound: p = {{"A", A}, {"k", k}, {"t_grid", t_grid}}; break;
        case Experiment::displacement:
        case Experiment::level_change: p = {{"A", A}, {"k", k}, {"t", t}}; break;
        case Experiment::persistence: {
            nlohmann::json s = nlohmann::json::array();
            for (const auto& v : starts) s.push_back(vector_json(v));
            p = {{"A", A}, {"k", k}, {"t0", t0}, {"starts", s}};
            break;
        }
        case Experiment::dyadic_escape: p["depth"] = depth; break;
        case Experiment::integral_1d: p["a"] = a; break;
        case Experiment::engine_validation: p["h_grid"] = h_grid; break;
    }
    j["parameters"] = p;
    return j;
}

}  // namespace inaccess
