#include "dsolab/errors.hpp"
#include "dsolab/harness.hpp"
#include "dsolab/scenario.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace dsolab {
namespace {

Scenario small(const std::string& experiment) {
    Scenario s = experiment_preset(experiment);
    s.T_out = 3;
    s.repetitions = 2;
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

TEST(Presets, Fig3aDefaults) {
    const Scenario s = experiment_preset("fig3a");
    EXPECT_EQ(s.mode, Mode::abstract_xi);
    EXPECT_EQ(s.true_xi.lo, -1.0);
    EXPECT_EQ(s.true_xi.hi, 2.0);
    EXPECT_EQ(s.epsilon0, 0.01);
    EXPECT_EQ(s.chi, 0.001);
    EXPECT_EQ(s.t_in, 5u);
    EXPECT_EQ(s.n_seed_samples, 10u);
    EXPECT_EQ(s.repetitions, 50u);
    EXPECT_EQ(s.T_out, 50u);
    EXPECT_EQ(s.update, UpdateVariant::full_algorithm1);
    EXPECT_EQ(s.true_xi.expansion_rate, 0.0);
}

TEST(Presets, Fig3bIsOneStep) {
    const Scenario s = experiment_preset("fig3b");
    EXPECT_EQ(s.update, UpdateVariant::one_step);
    EXPECT_EQ(s.algorithm1_options().count_max, 1u);
}

TEST(Presets, Fig3cWidensSupport) {
    const Scenario s = experiment_preset("fig3c");
    EXPECT_EQ(s.true_xi.expansion_rate, 0.1);
    EXPECT_DOUBLE_EQ(s.true_xi.lo_at(3), -1.3);
    EXPECT_DOUBLE_EQ(s.true_xi.hi_at(3), 2.3);
}

TEST(Presets, UnknownExperimentRejected) { EXPECT_THROW(experiment_preset("fig4"), ConfigError); }

TEST(ScenarioJson, RoundTrip) {
    Scenario s = small("fig3c");
    s.gamma = 0.1;
    s.bound_schedule.push_back({7, Vector::Constant(1, -0.02), Vector::Constant(1, 0.03)});
    const Scenario back = scenario_from_json(scenario_to_json(s));
    EXPECT_EQ(back.gamma, 0.1);
    EXPECT_EQ(back.true_xi.expansion_rate, 0.1);
    ASSERT_EQ(back.bound_schedule.size(), 1u);
    EXPECT_EQ(back.bound_schedule[0].from_step, 7u);
    EXPECT_EQ(scenario_to_json(back), scenario_to_json(s));
}

TEST(ScenarioJson, ProblemsListed) {
    const auto j = nlohmann::json::parse(R"({"gama": 0.1, "t_in": 1})");
    const auto p = scenario_problems(j);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_NE(p[0].find("gama"), std::string::npos);
}

TEST(ScenarioJson, NodeCountInferredFromAlpha) {
    const auto j = nlohmann::json::parse(
        R"({"network": {"alpha": [[0.004, 0.001], [0.001, 0.004]], "beta": [[0.004, 0.0], [0.0, 0.004]],
            "dv_min": -0.05, "dv_max": 0.05}})");
    EXPECT_EQ(scenario_from_json(j).network.n_nodes(), 2u);
}

TEST(ScenarioJson, PhysicalModeNeedsAggregators) {
    const auto j = nlohmann::json::parse(R"({"mode": "physical"})");
    EXPECT_THROW(scenario_from_json(j), ConfigError);
}

TEST(Scenario, BoundScheduleByGlobalStep) {
    Scenario s = small("fig3a");
    s.bound_schedule.push_back({10, Vector::Constant(1, -0.02), Vector::Constant(1, 0.02)});
    s.bound_schedule.push_back({20, Vector::Constant(1, -0.03), Vector::Constant(1, 0.01)});
    EXPECT_EQ(s.network_at(9).dv_max()[0], 0.05);
    EXPECT_EQ(s.network_at(10).dv_max()[0], 0.02);
    EXPECT_EQ(s.network_at(25).dv_max()[0], 0.01);
}

TEST(InnerLoop, RecordsOnePerStep) {
    const Scenario s = small("fig3a");
    RunResult res;
    RunContext ctx(s, 0);
    ctx.result = &res;
    std::vector<Vector> seed;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        Vector v = Vector::Zero(6);
        for (int j = 0; j < 5; ++j) v[j] = u(rng);
        seed.push_back(v);
    }
    const InnerLoopOutput out = inner_loop(ctx, AmbiguitySet::from_samples(seed, 0.01), 0);
    EXPECT_EQ(res.loops.size(), 5u);
    EXPECT_EQ(out.log.size() + res.infeasible_steps, 5u);
    EXPECT_EQ(ctx.step, 5u);
}

TEST(InnerLoop, PerfectKnowledgeHasNoCostGap) {
    Scenario s = small("fig3a");
    s.true_xi.lo = 0.5;
    s.true_xi.hi = 0.5 + 1e-12;
    s.epsilon0 = 0.0;
    const RunResult r = outer_loop(s, 0);
    ASSERT_FALSE(r.loops.empty());
    for (const auto& l : r.loops) {
        ASSERT_TRUE(l.feasible);
        EXPECT_NEAR(l.cost_exp, l.cost_act, 1e-9);
    }
    for (double e : r.epsilon) EXPECT_EQ(e, 0.0);
}

TEST(OuterLoop, SingleIteration) {
    Scenario s = small("fig3a");
    s.T_out = 1;
    const RunResult r = outer_loop(s, 0);
    ASSERT_EQ(r.epsilon.size(), 2u);
    EXPECT_EQ(r.epsilon[0], 0.01);
    EXPECT_GE(r.epsilon[1], 0.0);
    ASSERT_EQ(r.trace.size(), 2u);
    EXPECT_TRUE(r.trace[0].has_terms);
    EXPECT_FALSE(r.trace[1].has_terms);
}

TEST(OuterLoop, Deterministic) {
    const Scenario s = small("fig3b");
    const RunResult a = outer_loop(s, 1);
    const RunResult b = outer_loop(s, 1);
    EXPECT_EQ(a.epsilon, b.epsilon);
    std::stringstream sa;
    std::stringstream sb;
    write_loop_records(sa, {&a}, 1);
    write_loop_records(sb, {&b}, 1);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(OuterLoop, DistinctRunsDiffer) {
    const Scenario s = small("fig3a");
    EXPECT_NE(outer_loop(s, 0).loops.front().k.k_p[0], outer_loop(s, 1).loops.front().k.k_p[0]);
}

TEST(OuterLoop, PhysicalModeRuns) {
    const auto j = nlohmann::json::parse(R"({
        "mode": "physical", "T_out": 2, "repetitions": 1, "incentive_box": 4,
        "network": {"alpha": [[0.004]], "beta": [[0.004]], "dv_min": -0.05, "dv_max": 0.05},
        "dera": [{"node": 0, "seed": 3,
                  "units": [{"s": 0.5, "dp_min": -1, "dp_max": 1, "phi_min": 0.2, "phi_max": 0.2}],
                  "perturbations": [{"field": "s", "scale": 0.1}]}]})");
    const Scenario s = scenario_from_json(j);
    const RunResult r = outer_loop(s, 0);
    EXPECT_EQ(r.epsilon.size(), 3u);
    EXPECT_TRUE(r.w1_terminal.empty());
}

TEST(RunExperiment, ThreadCountDoesNotChangeResults) {
    const Scenario s = small("fig3a");
    const ExperimentResult a = run_experiment(s, 1);
    const ExperimentResult b = run_experiment(s, 2);
    ASSERT_EQ(a.runs.size(), 2u);
    for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(a.runs[r].epsilon, b.runs[r].epsilon);
    const auto m = mean_trajectory(a);
    EXPECT_EQ(m.size(), s.T_out + 1);
    EXPECT_EQ(m[0], 0.01);
    EXPECT_NEAR(terminal_stats(a).mean, m.back(), 1e-15);
}

TEST(WriteOutputs, FilesAndColumns) {
    const Scenario s = small("fig3a");
    const ExperimentResult r = run_experiment(s, 1);
    const auto dir = std::filesystem::temp_directory_path() / "dsolab_write_outputs_test";
    std::filesystem::remove_all(dir);
    write_outputs(r, dir);
    for (const char* f : {"epsilon_trace.csv", "loop_records.csv", "summary.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
        EXPECT_TRUE(std::filesystem::exists(dir / "1" / f)) << f;
    }
    const std::string trace = slurp(dir / "epsilon_trace.csv");
    EXPECT_EQ(trace.substr(0, trace.find('\n')),
              "run_id,T,epsilon,loss,grad_cost_term,grad_cvar_term,cvar_exp,cvar_act");
    EXPECT_NE(trace.find("\n0,0,0.01,"), std::string::npos);
    const std::string loops = slurp(dir / "loop_records.csv");
    EXPECT_EQ(loops.substr(0, loops.find('\n')), "run_id,T,t,kP1,kQ1,dP1,dQ1,cost_exp,cost_act,feasible");
    const auto summary = nlohmann::json::parse(slurp(dir / "0" / "summary.json"));
    EXPECT_EQ(summary.at("epsilon").size(), s.T_out + 1);
    // Re-running writes identical bytes.
    const auto dir2 = dir.string() + "_again";
    std::filesystem::remove_all(dir2);
    write_outputs(run_experiment(s, 1), dir2);
    EXPECT_EQ(slurp(dir / "epsilon_trace.csv"), slurp(std::filesystem::path(dir2) / "epsilon_trace.csv"));
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}

}  // namespace
}  // namespace dsolab
