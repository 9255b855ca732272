#include "dsolab/errors.hpp"
#include "dsolab/harness.hpp"
#include "dsolab/oracle/checks.hpp"
#include "dsolab/scenario.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw dsolab::ConfigError("cannot open scenario file '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw dsolab::ConfigError(path + ": " + e.what());
    }
}

int cmd_run(const std::string& scenario_path, const std::string& experiment,
            std::optional<std::uint64_t> seed, std::optional<std::size_t> reps,
            const std::string& out, std::size_t threads) {
    dsolab::Scenario s = scenario_path.empty() ? dsolab::experiment_preset(experiment)
                                               : dsolab::scenario_from_json(load_json(scenario_path));
    dsolab::apply_experiment(s, experiment);
    if (seed) s.seed = *seed;
    if (reps) s.repetitions = *reps;
    s.validate();

    spdlog::info("{}: {} repetitions, T_out={}, seed={}", experiment, s.repetitions, s.T_out, s.seed);
    const auto result = dsolab::run_experiment(s, threads);
    const std::filesystem::path dir = std::filesystem::path(out) / experiment;
    dsolab::write_outputs(result, dir);

    const auto st = dsolab::terminal_stats(result);
    std::cout << "terminal epsilon: mean=" << st.mean << " std=" << st.std << " min=" << st.min
              << " max=" << st.max << "\n";
    std::cout << "runtime: " << result.runtime_s << " s\n";
    std::cout << "output: " << dir.string() << "\n";
    return 0;
}

int cmd_validate(const std::string& path) {
    const auto problems = dsolab::scenario_problems(load_json(path));
    if (problems.empty()) {
        std::cout << path << ": ok\n";
        return 0;
    }
    for (const auto& p : problems) std::cout << path << ": " << p << "\n";
    return 1;
}

int cmd_oracle(std::uint64_t seed) {
    const auto results = dsolab::oracle::run_cross_checks(seed);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributionally robust incentive design for DER aggregators"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    auto* run = app.add_subcommand("run", "Run a Monte-Carlo experiment");
    std::string scenario_path;
    std::string experiment;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::string out = "out";
    std::size_t threads = 0;
    run->add_option("--scenario", scenario_path, "Scenario JSON (defaults to the experiment preset)")
        ->check(CLI::ExistingFile);
    run->add_option("--experiment", experiment, "Experiment")
        ->required()
        ->check(CLI::IsMember({"fig3a", "fig3b", "fig3c"}));
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--reps", reps, "Repetitions")->check(CLI::PositiveNumber);
    run->add_option("--out", out, "Output root");
    run->add_option("--threads", threads, "Worker threads (0 = hardware)");

    auto* validate = app.add_subcommand("validate", "Schema-check a scenario file");
    std::string validate_path;
    validate->add_option("scenario", validate_path, "Scenario JSON")->required()->check(CLI::ExistingFile);

    auto* oracle = app.add_subcommand("oracle", "Run the brute-force cross-check suite");
    std::uint64_t oracle_seed = 2024;
    oracle->add_option("--seed", oracle_seed, "Instance seed");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*run) return cmd_run(scenario_path, experiment, seed, reps, out, threads);
        if (*validate) return cmd_validate(validate_path);
        if (*oracle) return cmd_oracle(oracle_seed);
    } catch (const dsolab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
