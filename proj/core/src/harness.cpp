#include "dsolab/harness.hpp"

#include "dsolab/csv.hpp"
#include "dsolab/dera.hpp"
#include "dsolab/errors.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

namespace dsolab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

XiSample draw_true_xi(const Scenario& s, std::uint64_t T, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(s.true_xi.lo_at(T), s.true_xi.hi_at(T));
    XiSample xi;
    xi.nodes.resize(s.network.n_nodes());
    for (auto& node : xi.nodes) {
        for (double& v : node) {
            v = u(rng);
        }
    }
    return xi;
}

/// Coefficients that reproduce an observed response exactly through the
/// affine response map: only the constant terms are nonzero.
XiSample response_equivalent_xi(const NodalResponse& r) {
    XiSample xi;
    xi.nodes.resize(r.size());
    for (std::size_t n = 0; n < r.size(); ++n) {
        const auto e = static_cast<Eigen::Index>(n);
        xi.nodes[n] = {0.0, 0.0, 0.0, r.dp[e], r.dq[e]};
    }
    return xi;
}

NodalResponse physical_response(const Scenario& s, const Incentive& k, std::uint64_t step) {
    const std::size_t n = s.network.n_nodes();
    NodalResponse r = NodalResponse::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        const DeraGroundTruth truth = sample_params(s.dera[i], step);
        const UnitResponse u = dera_respond(truth, k.k_p[e], k.k_q[e]);
        r.dp[e] = u.dp;
        r.dq[e] = u.dq;
    }
    return r;
}

DroOptions solver_options(const Scenario& s) {
    DroOptions o;
    o.box = s.incentive_box;
    o.n_starts = s.solver.n_starts;
    o.step_min = s.solver.step_min;
    o.warn_on_box = false;
    return o;
}

bool same_bounds(const NetworkModel& a, const NetworkModel& b) {
    return a.dv_min() == b.dv_min() && a.dv_max() == b.dv_max();
}

/// Memo of solves for one ambiguity set, keyed by the voltage band.
class SolveCache {
public:
    SolveCache(const Scenario& s, const AmbiguitySet& amb, RunResult& res)
        : s_(s), amb_(amb), res_(res) {}

    const DroSolution& get(const NetworkModel& net) {
        for (const auto& [n, sol] : memo_) {
            if (same_bounds(n, net)) {
                return sol;
            }
        }
        DroSolution sol = solve_dro(net, amb_, s_.gamma, solver_options(s_));
        ++res_.solves;
        if (sol.at_box_boundary) {
            ++res_.box_hits;
        }
        spdlog::debug("solve run={} eps={} starts={} best_cost={} active_cvar={} mu={}",
                      res_.run_id, amb_.epsilon, sol.starts, sol.expected_cost, sol.cvar_value,
                      sol.mu);
        memo_.emplace_back(net, std::move(sol));
        return memo_.back().second;
    }

private:
    const Scenario& s_;
    const AmbiguitySet& amb_;
    RunResult& res_;
    std::vector<std::pair<NetworkModel, DroSolution>> memo_;
};

}  // namespace

RunContext::RunContext(const Scenario& s, std::uint64_t run) : scenario(s), run_id(run) {
    std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                      static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)};
    rng.seed(seq);
}

InnerLoopOutput inner_loop(RunContext& ctx, const AmbiguitySet& amb, std::uint64_t T) {
    const Scenario& s = ctx.scenario;
    if (ctx.result == nullptr) {
        throw ConfigError("inner_loop needs a result sink");
    }
    RunResult& res = *ctx.result;
    InnerLoopOutput out;
    SolveCache cache(s, amb, res);
    for (std::size_t t = 0; t < s.t_in; ++t) {
        const std::uint64_t step = ctx.step++;
        const NetworkModel net = s.network_at(step);
        const DroSolution& sol = cache.get(net);
        LoopRecord rec;
        rec.run_id = ctx.run_id;
        rec.T = T;
        rec.t = t;
        if (sol.status != DroStatus::optimal) {
            ++res.infeasible_steps;
            res.events.push_back("T=" + std::to_string(T) + " t=" + std::to_string(t) +
                                 ": infeasible solve, step skipped");
            spdlog::debug("run {} T={} t={}: infeasible, step skipped", ctx.run_id, T, t);
            rec.k = Incentive::zeros(net.n_nodes());
            rec.resp = NodalResponse::zeros(net.n_nodes());
            rec.feasible = false;
            res.loops.push_back(rec);
            continue;
        }
        StepRecord st;
        st.t = step;
        st.k = sol.k;
        if (s.mode == Mode::abstract_xi) {
            st.xi = draw_true_xi(s, T, ctx.rng);
            st.resp = abstract_xi_respond(st.xi, st.k);
        } else {
            st.resp = physical_response(s, st.k, step);
            st.xi = response_equivalent_xi(st.resp);
        }
        st.cost_exp = sol.expected_cost;
        st.cost_act = actual_cost(st);
        st.rows = chance_rows(net, st.k);
        st.lambda_co = sol.lambda_co;
        st.lambda_cc = sol.lambda_cc;
        st.mu = sol.mu;
        st.cvar_value = sol.cvar_value;
        rec.k = st.k;
        rec.resp = st.resp;
        rec.cost_exp = st.cost_exp;
        rec.cost_act = st.cost_act;
        res.loops.push_back(rec);
        out.observations.push_back({step, st.k, st.resp});
        out.log.steps.push_back(std::move(st));
    }
    return out;
}

RunResult outer_loop(const Scenario& s, std::uint64_t run_id) {
    s.validate();
    RunResult res;
    res.run_id = run_id;
    RunContext ctx(s, run_id);
    ctx.result = &res;
    const std::size_t n = s.network.n_nodes();
    SampleStore store(n);

    if (s.mode == Mode::abstract_xi) {
        for (std::size_t i = 0; i < s.n_seed_samples; ++i) {
            store.add(draw_true_xi(s, 0, ctx.rng), SampleSource::seeded, run_id, 0);
        }
    } else {
        // Probe the aggregators with random incentives and invert the pairs.
        std::uniform_real_distribution<double> u(-0.5 * s.incentive_box, 0.5 * s.incentive_box);
        std::vector<Observation> probes;
        for (std::size_t p = 0; p < s.n_seed_samples + 1; ++p) {
            Incentive k = Incentive::zeros(n);
            for (std::size_t i = 0; i < n; ++i) {
                k.k_p[static_cast<Eigen::Index>(i)] = u(ctx.rng);
                k.k_q[static_cast<Eigen::Index>(i)] = u(ctx.rng);
            }
            const std::uint64_t step = ctx.step++;
            probes.push_back({step, k, physical_response(s, k, step)});
        }
        const IngestResult ing = store.ingest(probes, run_id, 0);
        for (const auto& sk : ing.skipped) {
            res.events.push_back("seed pair skipped: " + sk.reason);
        }
        if (store.size() == 0) {
            throw InfeasibleProblem("no usable seed samples could be learned");
        }
        // Mark the seed samples as such.
        SampleStore seeded(n);
        for (const auto& smp : store.samples()) {
            seeded.add(smp.xi, SampleSource::seeded, run_id, 0);
        }
        store = std::move(seeded);
    }

    const Algorithm1Options a1 = s.algorithm1_options();
    double eps = s.epsilon0;
    res.epsilon.push_back(eps);
    for (std::uint64_t T = 0; T < s.T_out; ++T) {
        const AmbiguitySet amb =
            AmbiguitySet::from_samples(store.snapshot(), eps, s.support_margin);
        InnerLoopOutput inner = inner_loop(ctx, amb, T);

        if (s.mode == Mode::abstract_xi && s.xi_learning == XiLearning::direct) {
            for (const auto& st : inner.log.steps) {
                store.add(st.xi, SampleSource::learned, run_id, T + 1);
            }
        } else {
            const IngestResult ing = store.ingest(inner.observations, run_id, T + 1);
            for (const auto& sk : ing.skipped) {
                res.events.push_back("T=" + std::to_string(T) + " pair skipped at node " +
                                     std::to_string(sk.node) + ": " + sk.reason);
            }
        }

        TraceRecord tr;
        tr.run_id = run_id;
        tr.T = T;
        tr.epsilon = eps;
        if (inner.log.empty()) {
            res.events.push_back("T=" + std::to_string(T) + ": no completed steps, radius kept");
        } else {
            const InnerLoopLog& log = inner.log;
            const ResolveFn resolve = [&](double e) {
                const AmbiguitySet amb_e = amb.with_epsilon(e);
                std::vector<std::pair<NetworkModel, double>> memo;
                std::vector<double> costs;
                for (const auto& st : log.steps) {
                    const NetworkModel net = s.network_at(st.t);
                    double cost = 0.0;
                    bool hit = false;
                    for (const auto& [mn, c] : memo) {
                        if (same_bounds(mn, net)) {
                            cost = c;
                            hit = true;
                            break;
                        }
                    }
                    if (!hit) {
                        DroOptions o = solver_options(s);
                        o.warm_start = st.k;
                        o.n_starts = s.solver.resolve_starts;
                        o.compute_mu = false;
                        const DroSolution sol = solve_dro(net, amb_e, s.gamma, o);
                        ++res.solves;
                        if (sol.status != DroStatus::optimal) {
                            throw InfeasibleProblem("re-solve infeasible at epsilon " +
                                                    std::to_string(e));
                        }
                        cost = sol.expected_cost;
                        memo.emplace_back(net, cost);
                    }
                    costs.push_back(cost);
                }
                return costs;
            };
            try {
                const Algorithm1Result r = algorithm1(log, eps, resolve, a1);
                tr.has_terms = true;
                tr.loss = r.entry.loss;
                tr.grad_cost_term = r.entry.grad_cost_term;
                tr.grad_cvar_term = r.entry.grad_cvar_term;
                tr.cvar_exp = r.entry.cvar_exp;
                tr.cvar_act = r.entry.cvar_act;
                eps = r.epsilon;
            } catch (const InfeasibleProblem& e) {
                res.events.push_back("T=" + std::to_string(T) + ": " + e.what() +
                                     "; radius kept");
            }
        }
        res.trace.push_back(tr);
        res.epsilon.push_back(eps);
    }
    TraceRecord last;
    last.run_id = run_id;
    last.T = s.T_out;
    last.epsilon = eps;
    res.trace.push_back(last);

    if (s.mode == Mode::abstract_xi) {
        // Empirical marginals against the true uniform law, via a fine quantile grid.
        constexpr std::size_t grid = 2000;
        const double lo = s.true_xi.lo_at(s.T_out - 1);
        const double hi = s.true_xi.hi_at(s.T_out - 1);
        std::vector<double> qa(grid);
        std::vector<double> qw(grid, 1.0 / grid);
        for (std::size_t g = 0; g < grid; ++g) {
            qa[g] = lo + (hi - lo) * (static_cast<double>(g) + 0.5) / grid;
        }
        const auto& samples = store.samples();
        std::vector<double> ew(samples.size(), 1.0 / static_cast<double>(samples.size()));
        for (std::size_t c = 0; c < 5; ++c) {
            for (std::size_t node = 0; node < n; ++node) {
                std::vector<double> ea;
                ea.reserve(samples.size());
                for (const auto& smp : samples) {
                    ea.push_back(smp.xi.nodes[node][c]);
                }
                res.w1_terminal.push_back(wasserstein_1d(ea, ew, qa, qw));
            }
        }
    }
    return res;
}

ExperimentResult run_experiment(const Scenario& scenario, std::size_t threads) {
    scenario.validate();
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult out;
    out.name = scenario.name;
    out.scenario = scenario;
    const std::size_t reps = scenario.repetitions;
    out.runs.resize(reps);
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, reps);
    std::vector<std::exception_ptr> errors(reps);
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (std::size_t r = next++; r < reps; r = next++) {
            try {
                out.runs[r] = outer_loop(scenario, r);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (std::size_t r = 0; r < reps; ++r) {
        if (errors[r]) {
            try {
                std::rethrow_exception(errors[r]);
            } catch (const std::exception& e) {
                throw Error("run " + std::to_string(r) + " failed: " + e.what());
            }
        }
    }
    out.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

EpsilonStats terminal_stats(const ExperimentResult& r) {
    EpsilonStats st;
    if (r.runs.empty()) {
        return st;
    }
    std::vector<double> v;
    for (const auto& run : r.runs) {
        v.push_back(run.epsilon.back());
    }
    double acc = 0.0;
    for (double x : v) acc += x;
    st.mean = acc / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - st.mean) * (x - st.mean);
    st.std = std::sqrt(sq / static_cast<double>(v.size()));
    st.min = *std::min_element(v.begin(), v.end());
    st.max = *std::max_element(v.begin(), v.end());
    return st;
}

std::vector<double> mean_trajectory(const ExperimentResult& r) {
    if (r.runs.empty()) {
        return {};
    }
    std::vector<double> m(r.runs.front().epsilon.size(), 0.0);
    for (const auto& run : r.runs) {
        for (std::size_t T = 0; T < m.size(); ++T) {
            m[T] += run.epsilon[T];
        }
    }
    for (double& x : m) {
        x /= static_cast<double>(r.runs.size());
    }
    return m;
}

void write_epsilon_trace(std::ostream& os, const std::vector<const RunResult*>& runs) {
    os << "run_id,T,epsilon,loss,grad_cost_term,grad_cvar_term,cvar_exp,cvar_act\n";
    for (const RunResult* run : runs) {
        for (const auto& t : run->trace) {
            os << t.run_id << ',' << t.T << ',' << csv::num(t.epsilon);
            if (t.has_terms) {
                os << ',' << csv::num(t.loss) << ',' << csv::num(t.grad_cost_term) << ','
                   << csv::num(t.grad_cvar_term) << ',' << csv::num(t.cvar_exp) << ','
                   << csv::num(t.cvar_act);
            } else {
                os << ",,,,,";
            }
            os << '\n';
        }
    }
}

void write_loop_records(std::ostream& os, const std::vector<const RunResult*>& runs,
                        std::size_t n_nodes) {
    os << "run_id,T,t";
    for (const char* p : {"kP", "kQ", "dP", "dQ"}) {
        for (std::size_t i = 1; i <= n_nodes; ++i) {
            os << ',' << p << i;
        }
    }
    os << ",cost_exp,cost_act,feasible\n";
    for (const RunResult* run : runs) {
        for (const auto& l : run->loops) {
            os << l.run_id << ',' << l.T << ',' << l.t;
            for (const Vector* v : {&l.k.k_p, &l.k.k_q, &l.resp.dp, &l.resp.dq}) {
                for (Eigen::Index i = 0; i < v->size(); ++i) {
                    os << ',' << csv::num((*v)[i]);
                }
            }
            os << ',' << csv::num(l.cost_exp) << ',' << csv::num(l.cost_act) << ','
               << (l.feasible ? 1 : 0) << '\n';
        }
    }
}

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) {
        throw Error("cannot open " + p.string() + " for writing");
    }
    return f;
}

void finish(std::ofstream& f, const fs::path& p) {
    f.flush();
    if (!f) {
        throw Error("failed writing " + p.string());
    }
}

json run_summary(const RunResult& run) {
    return {{"run_id", run.run_id},
            {"terminal_epsilon", run.epsilon.back()},
            {"epsilon", run.epsilon},
            {"w1_terminal", run.w1_terminal},
            {"infeasible_steps", run.infeasible_steps},
            {"box_hits", run.box_hits},
            {"solves", run.solves},
            {"events", run.events}};
}

}  // namespace

void write_outputs(const ExperimentResult& r, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create " + dir.string() + ": " + ec.message());
    }
    const std::size_t n = r.scenario.network.n_nodes();
    std::vector<const RunResult*> all;
    for (const auto& run : r.runs) {
        all.push_back(&run);
        const fs::path sub = dir / std::to_string(run.run_id);
        fs::create_directories(sub, ec);
        if (ec) {
            throw Error("cannot create " + sub.string() + ": " + ec.message());
        }
        const std::vector<const RunResult*> one{&run};
        {
            const fs::path p = sub / "epsilon_trace.csv";
            auto f = open_out(p);
            write_epsilon_trace(f, one);
            finish(f, p);
        }
        {
            const fs::path p = sub / "loop_records.csv";
            auto f = open_out(p);
            write_loop_records(f, one, n);
            finish(f, p);
        }
        {
            const fs::path p = sub / "summary.json";
            auto f = open_out(p);
            json j = run_summary(run);
            j["scenario"] = scenario_to_json(r.scenario);
            f << j.dump(2) << '\n';
            finish(f, p);
        }
    }
    {
        const fs::path p = dir / "epsilon_trace.csv";
        auto f = open_out(p);
        write_epsilon_trace(f, all);
        finish(f, p);
    }
    {
        const fs::path p = dir / "loop_records.csv";
        auto f = open_out(p);
        write_loop_records(f, all, n);
        finish(f, p);
    }
    {
        const EpsilonStats st = terminal_stats(r);
        std::size_t infeasible = 0;
        std::size_t box_hits = 0;
        std::size_t solves = 0;
        for (const auto& run : r.runs) {
            infeasible += run.infeasible_steps;
            box_hits += run.box_hits;
            solves += run.solves;
        }
        json j;
        j["experiment"] = r.name;
        j["scenario"] = scenario_to_json(r.scenario);
        j["repetitions"] = r.runs.size();
        j["terminal_epsilon"] = {{"mean", st.mean}, {"std", st.std}, {"min", st.min},
                                 {"max", st.max}};
        j["mean_trajectory"] = mean_trajectory(r);
        j["runtime_s"] = r.runtime_s;
        j["infeasible_steps"] = infeasible;
        j["box_hits"] = box_hits;
        j["solves"] = solves;
        const fs::path p = dir / "summary.json";
        auto f = open_out(p);
        f << j.dump(2) << '\n';
        finish(f, p);
    }
}

}  // namespace dsolab
