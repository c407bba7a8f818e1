#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "spdepv/harness.hpp"
#include "spdepv/validation.hpp"

using namespace spdepv;

namespace {

json small_config() {
    return json::parse(R"({
      "name": "unit",
      "gamma": 1.0,
      "sigma": {"kind": "constant", "c": 1.0},
      "truncation": 64,
      "horizon": 1.0,
      "seed": 11,
      "replicates": 6,
      "delta_grid": {"dyadic": [3, 6]},
      "variations": [
        {"r": -1.0, "order": 2},
        {"r": 0.0, "order": 4},
        {"r": 0.0, "f": "min_sq_1"}
      ]
    })");
}

std::string csv_of(const ConvergenceTable& t) {
    std::ostringstream os;
    write_convergence_csv(t, os);
    return os.str();
}

}  // namespace

TEST(Aggregation, PairwiseSumAndSummary) {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i);
    EXPECT_NEAR(pairwise_sum(v), 0.1 * 999 * 1000 / 2, 1e-9);
    const std::vector<double> one{3.0};
    const auto s1 = summarize(one);
    EXPECT_FALSE(s1.se_available);
    EXPECT_TRUE(std::isnan(s1.std_error));
    const std::vector<double> two{1.0, 3.0};
    const auto s2 = summarize(two);
    EXPECT_TRUE(s2.se_available);
    EXPECT_DOUBLE_EQ(s2.mean, 2.0);
    EXPECT_DOUBLE_EQ(s2.std_error, 1.0);
}

TEST(Threads, EnvironmentFallback) {
    EXPECT_EQ(resolve_threads(3), 3u);
    setenv("SPDE_PV_THREADS", "5", 1);
    EXPECT_EQ(resolve_threads(0), 5u);
    unsetenv("SPDE_PV_THREADS");
    EXPECT_GE(resolve_threads(0), 1u);
}

TEST(Spec, ParsesDyadicGridAndDefaults) {
    const auto spec = experiment_from_json(small_config());
    ASSERT_EQ(spec.delta_grid.size(), 4u);
    EXPECT_DOUBLE_EQ(spec.delta_grid.front(), 0.125);
    EXPECT_DOUBLE_EQ(spec.delta_grid.back(), 1.0 / 64);
    EXPECT_EQ(spec.variations.size(), 3u);
    EXPECT_EQ(spec.variations[0].label, "r=-1,p=2");
    EXPECT_EQ(spec.sim.params.domain, DomainSpec::interval());
    EXPECT_EQ(spec.spec_hash().size(), 16u);
}

TEST(Spec, SeedOverrideChangesHash) {
    const auto a = experiment_from_json(small_config());
    const auto b = experiment_from_json(small_config(), 99);
    EXPECT_EQ(b.sim.seed, 99u);
    EXPECT_NE(a.spec_hash(), b.spec_hash());
}

TEST(Spec, Rejections) {
    auto j = small_config();
    j.erase("delta_grid");
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j = small_config();
    j["delta_grid"] = {0.125, 0.25};
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j["delta_grid"] = {0.3, 0.1};
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j = small_config();
    j["replicates"] = 0;
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j = small_config();
    j["sigma"] = {{"kind", "field"}, {"name", "nope"}};
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j = small_config();
    j["variations"] = json::array({{{"r", -1.0}}});
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    EXPECT_THROW(load_experiment("/definitely/missing.json"), ConfigError);
    try {
        load_experiment("/definitely/missing.json");
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/definitely/missing.json"), std::string::npos);
    }
}

TEST(Truncation, TailAndDefaultRule) {
    const DomainSpec d = DomainSpec::interval();
    // sum_{k>K} k^{-4} <= K^{-3} / 3
    EXPECT_NEAR(truncation_tail(d, 1.0, -1.0, 100), 1.0 / 3e6, 1e-9);
    const RegimeParams base{-1.0, 1.0, d};
    const std::vector<double> rs{-1.0};
    const double delta = std::ldexp(1.0, -12);
    const std::size_t k = default_truncation(base, rs, delta);
    EXPECT_LT(truncation_tail(d, 1.0, -1.0, k), 1e-4 * k_r(base) * delta);
    EXPECT_GE(truncation_tail(d, 1.0, -1.0, k / 2), 1e-4 * k_r(base) * delta);
    auto j = small_config();
    j.erase("truncation");
    const auto spec = experiment_from_json(j);
    EXPECT_EQ(spec.sim.truncation, std::size_t{1} << 16);  // r = 0 cannot meet the rule; capped
}

TEST(Convergence, SingleReplicateSingleDelta) {
    auto j = small_config();
    j["replicates"] = 1;
    j["delta_grid"] = {0.0625};
    const auto table = run_convergence(experiment_from_json(j), {1, false});
    ASSERT_EQ(table.rows.size(), 3u);
    for (const auto& r : table.rows) {
        EXPECT_FALSE(r.se_available);
        EXPECT_TRUE(std::isfinite(r.mean_V_at_T));
    }
}

TEST(Convergence, ColumnsFiniteAndTargets) {
    const auto spec = experiment_from_json(small_config());
    const auto table = run_convergence(spec, {1, false});
    ASSERT_EQ(table.rows.size(), 12u);
    for (const auto& r : table.rows) {
        EXPECT_TRUE(r.se_available);
        EXPECT_GT(r.std_error, 0.0);
        EXPECT_TRUE(std::isfinite(r.abs_error));
        EXPECT_TRUE(std::isfinite(r.sup_error_over_grid));
        EXPECT_NEAR(r.abs_error, std::abs(r.mean_V_at_T - r.theoretical_limit), 1e-15);
    }
    EXPECT_NEAR(table.rows[0].theoretical_limit, 1.6449340668, 1e-9);
    EXPECT_NEAR(table.rows[4].theoretical_limit, std::numbers::pi, 1e-12);
    EXPECT_DOUBLE_EQ(table.rows[8].theoretical_limit, 1.0);
    EXPECT_EQ(table.rows_for("r=0,p=4").size(), 4u);
}

TEST(Convergence, ReproducibleAcrossThreadCounts) {
    const auto spec = experiment_from_json(small_config());
    const auto a = csv_of(run_convergence(spec, {1, false}));
    const auto b = csv_of(run_convergence(spec, {3, false}));
    const auto c = csv_of(run_convergence(spec, {1, false}));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Convergence, CoarseLevelEqualsDirectSimulation) {
    // the coarsest level is an exact sub-sample, so a direct run at that step gives the same law;
    // with a single level the finest step is the only one, so values must coincide exactly
    auto j = small_config();
    j["replicates"] = 2;
    j["delta_grid"] = {0.125};
    const auto spec = experiment_from_json(j);
    const auto table = run_convergence(spec, {1, false});
    SimConfig sim = spec.sim;
    sim.delta = 0.125;
    sim.seed = derive_seed(spec.sim.seed, 0);
    const auto path0 = simulate_additive(sim);
    sim.seed = derive_seed(spec.sim.seed, 1);
    const auto path1 = simulate_additive(sim);
    const auto req = VariationRequest::power(-1.0, 2.0);
    const double mean = 0.5 * (power_variation(path0, req).values.back() + power_variation(path1, req).values.back());
    EXPECT_NEAR(table.rows[0].mean_V_at_T, mean, 1e-14);
}

TEST(Convergence, WritesOutputsWithStamp) {
    auto j = small_config();
    const auto dir = std::filesystem::temp_directory_path() / "spdepv_harness_out";
    std::filesystem::remove_all(dir);
    j["output_dir"] = dir.string();
    const auto spec = experiment_from_json(j);
    run_convergence(spec, {1, true});
    const auto side = read_json(dir / "unit_convergence.csv.json");
    EXPECT_EQ(side.at("spec_hash"), spec.spec_hash());
    EXPECT_EQ(side.at("version"), std::string(version()));
    EXPECT_TRUE(std::filesystem::exists(dir / "unit_convergence.csv"));
}

TEST(Convergence, ReplicateFailureNamesSeed) {
    auto spec = experiment_from_json(small_config());
    spec.variations.push_back(VariationPlan{
        VariationRequest::scalar(-1.0, [](double) -> double { throw std::runtime_error("bad f"); }, "bad"),
        NormalizerRule::TauN, 1.0, "bad"});
    try {
        run_convergence(spec, {1, false});
        FAIL() << "expected failure";
    } catch (const Error& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("replicate 0"), std::string::npos) << what;
        EXPECT_NE(what.find(std::to_string(derive_seed(spec.sim.seed, 0))), std::string::npos) << what;
    }
}

TEST(Holder, SlopesOnSmallGrid) {
    auto j = small_config();
    j["truncation"] = 1024;
    j["replicates"] = 4000;
    j["delta_grid"] = {{"dyadic", {6, 10}}};
    const auto spec = experiment_from_json(j);
    const auto h = estimate_holder(spec, -1.0, {1, false});
    EXPECT_NEAR(h.slope, 0.5, 0.03);
    EXPECT_LE(h.ci_low, h.slope);
    EXPECT_GE(h.ci_high, h.slope);
    EXPECT_EQ(h.deltas.size(), 5u);
    EXPECT_DOUBLE_EQ(h.alpha_theory, 0.5);
}

TEST(Holder, Preconditions) {
    auto j = small_config();
    j["delta_grid"] = {{"dyadic", {3, 5}}};
    EXPECT_THROW(estimate_holder(experiment_from_json(j), -1.0), InvalidArgument);
    j = small_config();
    j["sigma"] = {{"kind", "field"}, {"name", "sin_x"}};
    j["spatial_grid"] = 128;
    EXPECT_THROW(estimate_holder(experiment_from_json(j), -1.0), InvalidArgument);
}

TEST(Constants, ReportExamples) {
    const std::vector<int> orders{1, 2};
    const auto rep = report_constants({-1.0, 1.0, DomainSpec::interval()}, orders);
    EXPECT_NEAR(rep.k_r, 1.6449, 1e-4);
    EXPECT_NEAR(rep.constants_by_order.at(2), 4.8705, 1e-4);
    const json j = rep;
    EXPECT_EQ(j.at("regime"), "SUB");
    EXPECT_THROW(report_constants({0.5, 1.0, DomainSpec::interval()}, orders), RegimeError);
}

TEST(Validation, DefaultTablePassesAndCorruptedFails) {
    EXPECT_TRUE(run_validation().all_passed());
    auto table = default_constant_table();
    table["entries"][1]["expected"] = 4.97;
    const auto rep = run_validation(table);
    EXPECT_FALSE(rep.all_passed());
    EXPECT_THROW(run_validation(json::object()), ConfigError);
}

TEST(FieldExperiment, RunsWithGeneralSigmaTarget) {
    auto j = small_config();
    j["sigma"] = {{"kind", "field"}, {"name", "sin_x"}};
    j["truncation"] = 16;
    j["spatial_grid"] = 64;
    j["replicates"] = 2;
    const auto spec = experiment_from_json(j);
    const auto table = run_convergence(spec, {1, false});
    // r = 0, order 4: (K_0 / pi)^2 int_0^1 (pi / 2)^2 ds = pi / 4
    EXPECT_NEAR(table.rows_for("r=0,p=4").front().theoretical_limit, std::numbers::pi / 4.0, 1e-8);
    EXPECT_TRUE(std::isnan(table.rows_for("r=-1,p=2").front().theoretical_limit));
}
