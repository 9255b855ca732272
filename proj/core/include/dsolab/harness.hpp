#pragma once

#include "dsolab/adapt.hpp"
#include "dsolab/dro.hpp"
#include "dsolab/scenario.hpp"
#include "dsolab/surrogate.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace dsolab {

struct LoopRecord {
    std::uint64_t run_id = 0;
    std::uint64_t T = 0;
    std::uint64_t t = 0;
    Incentive k;
    NodalResponse resp;
    double cost_exp = 0.0;
    double cost_act = 0.0;
    bool feasible = true;
};

/// One row of the radius trace. Row T carries epsilon_T and, for T < T_out,
/// the terms of the update performed in iteration T.
struct TraceRecord {
    std::uint64_t run_id = 0;
    std::uint64_t T = 0;
    double epsilon = 0.0;
    bool has_terms = false;
    double loss = 0.0;
    double grad_cost_term = 0.0;
    double grad_cvar_term = 0.0;
    double cvar_exp = 0.0;
    double cvar_act = 0.0;
};

struct RunResult {
    std::uint64_t run_id = 0;
    std::vector<double> epsilon;  ///< epsilon_0 .. epsilon_{T_out}
    std::vector<TraceRecord> trace;
    std::vector<LoopRecord> loops;
    std::vector<double> w1_terminal;  ///< per coefficient, abstract mode only
    std::size_t infeasible_steps = 0;
    std::size_t box_hits = 0;
    std::size_t solves = 0;
    std::vector<std::string> events;
};

/// Per-run state threaded through the loops.
struct RunContext {
    const Scenario& scenario;
    std::uint64_t run_id = 0;
    std::mt19937_64 rng;
    std::uint64_t step = 0;  ///< global inner step counter
    RunResult* result = nullptr;

    RunContext(const Scenario& s, std::uint64_t run);
};

struct InnerLoopOutput {
    InnerLoopLog log;
    std::vector<Observation> observations;
};

/// t_in incentive/response rounds against a fixed ambiguity set.
InnerLoopOutput inner_loop(RunContext& ctx, const AmbiguitySet& amb, std::uint64_t T);

/// Full belief-update loop for one repetition.
RunResult outer_loop(const Scenario& scenario, std::uint64_t run_id);

struct ExperimentResult {
    std::string name;
    Scenario scenario;
    std::vector<RunResult> runs;  ///< ordered by run_id
    double runtime_s = 0.0;
};

/// Runs every repetition (concurrently when threads > 1) and folds the
/// results in run_id order.
ExperimentResult run_experiment(const Scenario& scenario, std::size_t threads = 0);

struct EpsilonStats {
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
};

EpsilonStats terminal_stats(const ExperimentResult& r);

/// Mean radius over runs at each T.
std::vector<double> mean_trajectory(const ExperimentResult& r);

/// Writes <dir>/<run_id>/{epsilon_trace.csv, loop_records.csv, summary.json}
/// plus the same three files aggregated over runs in <dir>.
void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir);

void write_epsilon_trace(std::ostream& os, const std::vector<const RunResult*>& runs);
void write_loop_records(std::ostream& os, const std::vector<const RunResult*>& runs,
                        std::size_t n_nodes);

}  // namespace dsolab
