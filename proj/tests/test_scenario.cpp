#include <gtest/gtest.h>

#include <string>

#include "inaccess/scenario.hpp"

using namespace inaccess;
using nlohmann::json;

namespace {

json base_hitting() {
    return {{"schema_version", 1},
            {"experiment", "hitting"},
            {"field", {{"name", "gbm"}}},
            {"start", {1.0}},
            {"horizon", 2.0},
            {"n_paths", 200},
            {"master_seed", 1},
            {"parameters", {{"eps_grid", {1e-2, 1e-3}}}}};
}

std::string error_of(const json& doc) {
    try {
        parse_scenario(doc);
    } catch (const invalid_input& e) {
        return e.what();
    }
    return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST(parse_scenario, valid_hitting) {
    const auto cfg = parse_scenario(base_hitting());
    EXPECT_EQ(cfg.experiment, Experiment::hitting);
    EXPECT_EQ(cfg.n_paths, 200u);
    EXPECT_EQ(cfg.eps_grid.size(), 2u);
    EXPECT_DOUBLE_EQ(cfg.field.lambda_tol(), 1e-12);
    EXPECT_EQ(cfg.policy, StepPolicy());
}

TEST(parse_scenario, error_paths) {
    auto doc = base_hitting();
    doc["start"] = {1.0, 2.0};
    EXPECT_TRUE(starts_with(error_of(doc), "start: dimension mismatch")) << error_of(doc);

    doc = base_hitting();
    doc["field"]["params"] = {{"scal", 2.0}};
    EXPECT_NE(error_of(doc).find("field.params.scal"), std::string::npos) << error_of(doc);

    doc = base_hitting();
    doc["horizn"] = 1.0;
    EXPECT_NE(error_of(doc).find("horizn"), std::string::npos);

    doc = base_hitting();
    doc["experiment"] = "hiting";
    const std::string e = error_of(doc);
    EXPECT_NE(e.find("sqrt-bound"), std::string::npos) << e;
    EXPECT_NE(e.find("engine-validation"), std::string::npos) << e;

    doc = base_hitting();
    doc["n_paths"] = 10;
    EXPECT_TRUE(starts_with(error_of(doc), "n_paths")) << error_of(doc);
    doc["min_paths"] = 5;
    EXPECT_EQ(error_of(doc), "");

    doc = base_hitting();
    doc["parameters"]["eps_grid"] = {1e-3, 1e-2};
    EXPECT_TRUE(starts_with(error_of(doc), "parameters.eps_grid")) << error_of(doc);

    doc = base_hitting();
    doc["policy"] = {{"kind", "fixed"}, {"h", -1.0}};
    EXPECT_TRUE(starts_with(error_of(doc), "policy.h")) << error_of(doc);

    doc = base_hitting();
    doc.erase("master_seed");
    EXPECT_NE(error_of(doc).find("master_seed"), std::string::npos);

    doc = base_hitting();
    doc["schema_version"] = 2;
    EXPECT_TRUE(starts_with(error_of(doc), "schema_version"));

    doc = base_hitting();
    doc["start"] = {0.0};
    EXPECT_TRUE(starts_with(error_of(doc), "start: lies in Lambda"));

    EXPECT_THROW(parse_scenario(std::string("{ not json")), invalid_input);
}

TEST(parse_scenario, sqrt_bound_defaults) {
    json doc = {{"schema_version", 1}, {"experiment", "sqrt-bound"}, {"field", {{"name", "gbm"}}},
                {"start", {1.0}},      {"n_paths", 100},             {"master_seed", 2},
                {"parameters", {{"k", 2}}}};
    const auto cfg = parse_scenario(doc);
    EXPECT_DOUBLE_EQ(cfg.A, 4.0);
    EXPECT_EQ(cfg.t_grid, default_t_grid(markov_constant(1, 1.0)));
    doc["parameters"]["A"] = 3.0;
    EXPECT_TRUE(starts_with(error_of(doc), "start")) << error_of(doc);
}

TEST(parse_scenario, persistence_defaults) {
    const json doc = {{"schema_version", 1}, {"experiment", "persistence"}, {"field", {{"name", "gbm"}}},
                      {"start", {1.0}},      {"n_paths", 100},              {"master_seed", 2}};
    const auto cfg = parse_scenario(doc);
    EXPECT_EQ(cfg.k, 0);
    EXPECT_DOUBLE_EQ(cfg.A, 1.0);
    EXPECT_DOUBLE_EQ(cfg.t0, t0_threshold(8 * std::sqrt(3.0)));
    ASSERT_EQ(cfg.starts.size(), 1u);
}

TEST(parse_scenario, integral_needs_1d_field) {
    const json doc = {{"schema_version", 1}, {"experiment", "integral-1d"}, {"field", {{"name", "diag_linear"}}}};
    EXPECT_TRUE(starts_with(error_of(doc), "field")) << error_of(doc);
    const json ok = {{"schema_version", 1}, {"experiment", "integral-1d"}, {"field", {{"name", "power_law"}}}};
    EXPECT_DOUBLE_EQ(parse_scenario(ok).a, 1.0);
}

TEST(parse_scenario, estimated_lipschitz) {
    json doc = base_hitting();
    doc["lipschitz"] = {{"mode", "estimated"}, {"region_lo", {-1.0}}, {"region_hi", {1.0}}, {"samples", 1000}};
    const auto cfg = parse_scenario(doc);
    EXPECT_EQ(cfg.field.lipschitz_source(), LipschitzSource::estimated);
    EXPECT_GE(cfg.field.lipschitz_K(), 1.0);
    EXPECT_LE(cfg.field.lipschitz_K(), 1.25);
    doc["lipschitz"]["mode"] = "guess";
    EXPECT_TRUE(starts_with(error_of(doc), "lipschitz.mode"));
}

TEST(parse_scenario, echo_round_trips) {
    const auto cfg = parse_scenario(base_hitting());
    const auto echo = cfg.echo();
    EXPECT_EQ(echo["experiment"], "hitting");
    EXPECT_EQ(echo["policy"]["kind"], "adaptive");
    EXPECT_EQ(echo["n_paths"], 200);
    EXPECT_EQ(echo["field_lipschitz_K"], 1.0);
}
