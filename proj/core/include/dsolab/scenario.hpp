#pragma once

#include "dsolab/adapt.hpp"
#include "dsolab/dera.hpp"
#include "dsolab/netmodel.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dsolab {

enum class Mode { abstract_xi, physical };
enum class UpdateVariant { full_algorithm1, one_step };
enum class XiLearning { direct, inversion };

/// Voltage band in force from a given global inner step onwards.
struct BoundStep {
    std::uint64_t from_step = 0;
    Vector dv_min;
    Vector dv_max;
};

/// Per-node i.i.d. uniform law of the five coefficients, optionally widening
/// by `expansion_rate` on each side per outer iteration.
struct TrueXiLaw {
    double lo = -1.0;
    double hi = 2.0;
    double expansion_rate = 0.0;

    double lo_at(std::uint64_t T) const { return lo - expansion_rate * static_cast<double>(T); }
    double hi_at(std::uint64_t T) const { return hi + expansion_rate * static_cast<double>(T); }
};

struct SolverConfig {
    std::size_t n_starts = 4;
    std::size_t resolve_starts = 2;
    double step_min = 1e-6;
};

/// Single-node network used when a scenario names none.
NetworkModel default_network();

struct Scenario {
    std::string name = "custom";
    Mode mode = Mode::abstract_xi;
    NetworkModel network = default_network();
    std::vector<BoundStep> bound_schedule;
    std::vector<ParamProcess> dera;  ///< one per node, physical mode
    TrueXiLaw true_xi;
    double gamma = 0.05;
    double epsilon0 = 0.01;
    double chi = 0.001;
    std::size_t t_in = 5;
    std::size_t T_out = 50;
    std::size_t n_seed_samples = 10;
    double support_margin = 0.25;
    double incentive_box = 10.0;
    UpdateVariant update = UpdateVariant::full_algorithm1;
    XiLearning xi_learning = XiLearning::direct;
    CvarExpMode cvar_exp_mode = CvarExpMode::convention;
    std::size_t count_max = 50;
    double d_eps_min = 1e-6;
    std::uint64_t seed = 1;
    std::size_t repetitions = 50;
    SolverConfig solver;

    /// Throws ConfigError describing the first violated rule.
    void validate() const;

    /// Network with the voltage band in force at a global inner step.
    NetworkModel network_at(std::uint64_t step) const;

    Algorithm1Options algorithm1_options() const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

/// Schema check without building the scenario; returns every problem found.
std::vector<std::string> scenario_problems(const nlohmann::json& j);

/// Experiment presets: fig3a (full algorithm), fig3b (one step per
/// iteration), fig3c (full algorithm with a widening true law).
Scenario experiment_preset(const std::string& name);

/// Applies the experiment's defining settings on top of a base scenario.
void apply_experiment(Scenario& s, const std::string& name);

Mode parse_mode(const std::string& s);
UpdateVariant parse_update(const std::string& s);
XiLearning parse_xi_learning(const std::string& s);
CvarExpMode parse_cvar_exp_mode(const std::string& s);
std::string to_string(Mode m);
std::string to_string(UpdateVariant u);
std::string to_string(XiLearning x);
std::string to_string(CvarExpMode c);

}  // namespace dsolab
