#include "dsolab/scenario.hpp"

#include "dsolab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dsolab {

using nlohmann::json;

namespace {

Vector vec_from(const json& j, const std::string& what) {
    if (!j.is_array()) {
        throw ConfigError(what + " must be an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw ConfigError(what + " must contain numbers");
        }
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Matrix mat_from(const json& j, std::size_t n, const std::string& what) {
    // Accepts nested rows or a flat row-major list.
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    if (!j.is_array()) {
        throw ConfigError(what + " must be an array");
    }
    if (j.size() == n && n > 0 && j[0].is_array()) {
        for (std::size_t r = 0; r < n; ++r) {
            const Vector row = vec_from(j[r], what);
            if (static_cast<std::size_t>(row.size()) != n) {
                throw ConfigError(what + " must be " + std::to_string(n) + "x" + std::to_string(n));
            }
            m.row(static_cast<Eigen::Index>(r)) = row.transpose();
        }
        return m;
    }
    const Vector flat = vec_from(j, what);
    if (static_cast<std::size_t>(flat.size()) != n * n) {
        throw ConfigError(what + " must hold " + std::to_string(n * n) + " entries");
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                flat[static_cast<Eigen::Index>(r * n + c)];
        }
    }
    return m;
}

json vec_to(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

json mat_to(const Matrix& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        a.push_back(vec_to(m.row(r).transpose()));
    }
    return a;
}

Vector constant_or_vector(const json& j, std::size_t n, const std::string& what) {
    if (j.is_number()) {
        return Vector::Constant(static_cast<Eigen::Index>(n), j.get<double>());
    }
    Vector v = vec_from(j, what);
    if (static_cast<std::size_t>(v.size()) != n) {
        throw ConfigError(what + " must have " + std::to_string(n) + " entries");
    }
    return v;
}

NetworkModel network_from(const json& j) {
    if (j.contains("feeder")) {
        const json& f = j.at("feeder");
        const Vector r = vec_from(f.at("r"), "feeder.r");
        const Vector x = vec_from(f.at("x"), "feeder.x");
        const double v0 = f.value("v0", 1.0);
        const std::size_t n = static_cast<std::size_t>(r.size());
        const Vector lo = constant_or_vector(f.value("dv_min", json(-0.05)), n, "feeder.dv_min");
        const Vector hi = constant_or_vector(f.value("dv_max", json(0.05)), n, "feeder.dv_max");
        return radial_feeder_sensitivities(std::span<const double>(r.data(), n),
                                           std::span<const double>(x.data(), n), v0, lo, hi);
    }
    const json& nj = j.at("network");
    const std::size_t n = nj.contains("n_nodes") ? nj.at("n_nodes").get<std::size_t>()
                                                 : nj.at("alpha").size();
    if (n == 0) {
        throw ConfigError("network.n_nodes must be positive");
    }
    return NetworkModel(mat_from(nj.at("alpha"), n, "network.alpha"),
                        mat_from(nj.at("beta"), n, "network.beta"),
                        constant_or_vector(nj.at("dv_min"), n, "network.dv_min"),
                        constant_or_vector(nj.at("dv_max"), n, "network.dv_max"));
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

}  // namespace

NetworkModel default_network() {
    Matrix a(1, 1);
    a(0, 0) = 0.004;
    Matrix b(1, 1);
    b(0, 0) = 0.004;
    return NetworkModel(a, b, Vector::Constant(1, -0.05), Vector::Constant(1, 0.05));
}

Mode parse_mode(const std::string& s) {
    if (s == "abstract") return Mode::abstract_xi;
    if (s == "physical") return Mode::physical;
    throw ConfigError("mode must be abstract or physical, got '" + s + "'");
}

UpdateVariant parse_update(const std::string& s) {
    if (s == "full_algorithm1") return UpdateVariant::full_algorithm1;
    if (s == "one_step") return UpdateVariant::one_step;
    throw ConfigError("update must be full_algorithm1 or one_step, got '" + s + "'");
}

XiLearning parse_xi_learning(const std::string& s) {
    if (s == "direct") return XiLearning::direct;
    if (s == "inversion") return XiLearning::inversion;
    throw ConfigError("xi_learning must be direct or inversion, got '" + s + "'");
}

CvarExpMode parse_cvar_exp_mode(const std::string& s) {
    if (s == "convention") return CvarExpMode::convention;
    if (s == "achieved") return CvarExpMode::achieved;
    throw ConfigError("cvar_exp_mode must be convention or achieved, got '" + s + "'");
}

std::string to_string(Mode m) { return m == Mode::abstract_xi ? "abstract" : "physical"; }
std::string to_string(UpdateVariant u) {
    return u == UpdateVariant::full_algorithm1 ? "full_algorithm1" : "one_step";
}
std::string to_string(XiLearning x) { return x == XiLearning::direct ? "direct" : "inversion"; }
std::string to_string(CvarExpMode c) {
    return c == CvarExpMode::convention ? "convention" : "achieved";
}

void Scenario::validate() const {
    const std::size_t n = network.n_nodes();
    if (t_in < 2) throw ConfigError("t_in must be at least 2");
    if (T_out < 1) throw ConfigError("T_out must be at least 1");
    if (!(epsilon0 >= 0.0) || !std::isfinite(epsilon0)) throw ConfigError("epsilon0 must be >= 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (!(chi >= 0.0) || !std::isfinite(chi)) throw ConfigError("chi must be >= 0");
    if (n_seed_samples < 1) throw ConfigError("n_seed_samples must be at least 1");
    if (!(support_margin >= 0.0)) throw ConfigError("support_margin must be >= 0");
    if (!(incentive_box > 0.0)) throw ConfigError("incentive_box must be positive");
    if (count_max < 1) throw ConfigError("count_max must be at least 1");
    if (!(d_eps_min >= 0.0)) throw ConfigError("d_eps_min must be >= 0");
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (solver.n_starts < 1 || solver.resolve_starts < 1) {
        throw ConfigError("solver start counts must be at least 1");
    }
    if (!(true_xi.lo < true_xi.hi) || !(true_xi.expansion_rate >= 0.0)) {
        throw ConfigError("true_xi needs lo < hi and a nonnegative expansion_rate");
    }
    for (const auto& b : bound_schedule) {
        require_size(b.dv_min, n, "bound_schedule.dv_min");
        require_size(b.dv_max, n, "bound_schedule.dv_max");
        if ((b.dv_min.array() > b.dv_max.array()).any()) {
            throw ConfigError("bound_schedule has dv_min > dv_max");
        }
    }
    if (mode == Mode::physical) {
        if (dera.size() != n) {
            throw ConfigError("physical mode needs one aggregator per node");
        }
        for (std::size_t i = 0; i < n; ++i) {
            dera[i].base.validate();
            if (dera[i].base.node != i) {
                throw ConfigError("aggregators must be listed in node order");
            }
        }
    }
}

NetworkModel Scenario::network_at(std::uint64_t step) const {
    const BoundStep* active = nullptr;
    for (const auto& b : bound_schedule) {
        if (b.from_step <= step && (active == nullptr || b.from_step >= active->from_step)) {
            active = &b;
        }
    }
    if (active == nullptr) {
        return network;
    }
    return network.with_bounds(active->dv_min, active->dv_max);
}

Algorithm1Options Scenario::algorithm1_options() const {
    Algorithm1Options o;
    o.gamma = gamma;
    o.chi = chi;
    o.count_max = update == UpdateVariant::one_step ? 1 : count_max;
    o.d_eps_min = d_eps_min;
    o.cvar_mode = cvar_exp_mode;
    return o;
}

Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("scenario must be a JSON object");
    }
    try {
        Scenario s;
        read_opt(j, "name", s.name);
        if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
        if (j.contains("network") || j.contains("feeder")) s.network = network_from(j);
        const std::size_t n = s.network.n_nodes();
        if (j.contains("bound_schedule")) {
            for (const auto& b : j.at("bound_schedule")) {
                s.bound_schedule.push_back({b.at("from_step").get<std::uint64_t>(),
                                            constant_or_vector(b.at("dv_min"), n, "dv_min"),
                                            constant_or_vector(b.at("dv_max"), n, "dv_max")});
            }
        }
        if (j.contains("dera")) {
            for (const auto& d : j.at("dera")) {
                ParamProcess p;
                p.base.node = d.at("node").get<std::size_t>();
                for (const auto& u : d.at("units")) {
                    p.base.units.push_back({u.at("s").get<double>(), u.at("dp_min").get<double>(),
                                            u.at("dp_max").get<double>(),
                                            u.at("phi_min").get<double>(),
                                            u.at("phi_max").get<double>()});
                }
                if (d.contains("perturbations")) {
                    for (const auto& q : d.at("perturbations")) {
                        p.perturbations.push_back(
                            {parse_field(q.at("field").get<std::string>()),
                             parse_family(q.value("family", std::string("uniform"))),
                             q.at("scale").get<double>()});
                    }
                }
                read_opt(d, "seed", p.seed);
                s.dera.push_back(std::move(p));
            }
        }
        if (j.contains("true_xi")) {
            const json& t = j.at("true_xi");
            read_opt(t, "lo", s.true_xi.lo);
            read_opt(t, "hi", s.true_xi.hi);
            read_opt(t, "expansion_rate", s.true_xi.expansion_rate);
        }
        read_opt(j, "gamma", s.gamma);
        read_opt(j, "epsilon0", s.epsilon0);
        read_opt(j, "chi", s.chi);
        read_opt(j, "t_in", s.t_in);
        read_opt(j, "T_out", s.T_out);
        read_opt(j, "n_seed_samples", s.n_seed_samples);
        read_opt(j, "support_margin", s.support_margin);
        read_opt(j, "incentive_box", s.incentive_box);
        if (j.contains("update")) s.update = parse_update(j.at("update").get<std::string>());
        if (j.contains("xi_learning")) {
            s.xi_learning = parse_xi_learning(j.at("xi_learning").get<std::string>());
        }
        if (j.contains("cvar_exp_mode")) {
            s.cvar_exp_mode = parse_cvar_exp_mode(j.at("cvar_exp_mode").get<std::string>());
        }
        read_opt(j, "count_max", s.count_max);
        read_opt(j, "d_eps_min", s.d_eps_min);
        read_opt(j, "seed", s.seed);
        read_opt(j, "repetitions", s.repetitions);
        if (j.contains("solver")) {
            const json& o = j.at("solver");
            read_opt(o, "n_starts", s.solver.n_starts);
            read_opt(o, "resolve_starts", s.solver.resolve_starts);
            read_opt(o, "step_min", s.solver.step_min);
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["mode"] = to_string(s.mode);
    j["network"] = {{"n_nodes", s.network.n_nodes()},
                    {"alpha", mat_to(s.network.alpha())},
                    {"beta", mat_to(s.network.beta())},
                    {"dv_min", vec_to(s.network.dv_min())},
                    {"dv_max", vec_to(s.network.dv_max())}};
    if (!s.bound_schedule.empty()) {
        json b = json::array();
        for (const auto& x : s.bound_schedule) {
            b.push_back({{"from_step", x.from_step},
                         {"dv_min", vec_to(x.dv_min)},
                         {"dv_max", vec_to(x.dv_max)}});
        }
        j["bound_schedule"] = b;
    }
    if (!s.dera.empty()) {
        json d = json::array();
        for (const auto& p : s.dera) {
            json units = json::array();
            for (const auto& u : p.base.units) {
                units.push_back({{"s", u.s},
                                 {"dp_min", u.dp_min},
                                 {"dp_max", u.dp_max},
                                 {"phi_min", u.phi_min},
                                 {"phi_max", u.phi_max}});
            }
            json pert = json::array();
            static const char* fields[] = {"s", "dp_min", "dp_max", "phi_min", "phi_max"};
            for (const auto& q : p.perturbations) {
                pert.push_back({{"field", fields[static_cast<int>(q.field)]},
                                {"family", q.family == FieldPerturbation::Family::uniform
                                               ? "uniform"
                                               : "normal"},
                                {"scale", q.scale}});
            }
            d.push_back({{"node", p.base.node}, {"units", units}, {"perturbations", pert},
                         {"seed", p.seed}});
        }
        j["dera"] = d;
    }
    j["true_xi"] = {{"lo", s.true_xi.lo},
                    {"hi", s.true_xi.hi},
                    {"expansion_rate", s.true_xi.expansion_rate}};
    j["gamma"] = s.gamma;
    j["epsilon0"] = s.epsilon0;
    j["chi"] = s.chi;
    j["t_in"] = s.t_in;
    j["T_out"] = s.T_out;
    j["n_seed_samples"] = s.n_seed_samples;
    j["support_margin"] = s.support_margin;
    j["incentive_box"] = s.incentive_box;
    j["update"] = to_string(s.update);
    j["xi_learning"] = to_string(s.xi_learning);
    j["cvar_exp_mode"] = to_string(s.cvar_exp_mode);
    j["count_max"] = s.count_max;
    j["d_eps_min"] = s.d_eps_min;
    j["seed"] = s.seed;
    j["repetitions"] = s.repetitions;
    j["solver"] = {{"n_starts", s.solver.n_starts},
                   {"resolve_starts", s.solver.resolve_starts},
                   {"step_min", s.solver.step_min}};
    return j;
}

std::vector<std::string> scenario_problems(const json& j) {
    std::vector<std::string> out;
    if (!j.is_object()) {
        out.emplace_back("scenario must be a JSON object");
        return out;
    }
    static const std::vector<std::string> known = {
        "name",         "mode",           "network",        "feeder",      "bound_schedule",
        "dera",         "true_xi",        "gamma",          "epsilon0",    "chi",
        "t_in",         "T_out",          "n_seed_samples", "support_margin",
        "incentive_box", "update",        "xi_learning",    "cvar_exp_mode", "count_max",
        "d_eps_min",    "seed",           "repetitions",    "solver",      "comment",
        "artifact_choices"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            out.push_back("unknown key '" + key + "'");
        }
    }
    if (j.contains("network") && j.contains("feeder")) {
        out.emplace_back("give either network or feeder, not both");
    }
    try {
        scenario_from_json(j);
    } catch (const Error& e) {
        out.emplace_back(e.what());
    }
    return out;
}

void apply_experiment(Scenario& s, const std::string& name) {
    if (name == "fig3a") {
        s.update = UpdateVariant::full_algorithm1;
        s.true_xi.expansion_rate = 0.0;
    } else if (name == "fig3b") {
        s.update = UpdateVariant::one_step;
        s.true_xi.expansion_rate = 0.0;
    } else if (name == "fig3c") {
        s.update = UpdateVariant::full_algorithm1;
        s.true_xi.expansion_rate = 0.1;
    } else {
        throw ConfigError("unknown experiment '" + name + "' (fig3a, fig3b, fig3c)");
    }
    s.name = name;
}

Scenario experiment_preset(const std::string& name) {
    Scenario s;
    apply_experiment(s, name);
    s.validate();
    return s;
}

}  // namespace dsolab
