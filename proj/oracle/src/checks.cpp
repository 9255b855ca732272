#include "dsolab/oracle/checks.hpp"

#include "dsolab/adapt.hpp"
#include "dsolab/dera.hpp"
#include "dsolab/dro.hpp"
#include "dsolab/oracle/oracles.hpp"
#include "dsolab/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace dsolab::oracle {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<Vector> uniform_atoms(Rng& rng, std::size_t ns, double lo = -1.0, double hi = 2.0) {
    std::vector<Vector> out;
    for (std::size_t i = 0; i < ns; ++i) {
        Vector v = Vector::Zero(6);
        for (int j = 0; j < 5; ++j) v[j] = uniform(rng, lo, hi);
        out.push_back(v);
    }
    return out;
}

NetworkModel single_node(double alpha, double beta, double band) {
    return NetworkModel(Matrix::Constant(1, 1, alpha), Matrix::Constant(1, 1, beta),
                        Vector::Constant(1, -band), Vector::Constant(1, band));
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

CheckResult check_dro_grid(std::uint64_t seed, int instances) {
    Rng rng(seed);
    constexpr double box = 2.0;
    double worst = 0.0;
    int compared = 0;
    int mismatched_status = 0;
    for (int inst = 0; compared < instances && inst < 10 * instances; ++inst) {
        const std::size_t ns = 2 + static_cast<std::size_t>(inst % 4);
        const auto atoms = uniform_atoms(rng, ns);
        const NetworkModel net = single_node(uniform(rng, 0.002, 0.006), uniform(rng, 0.002, 0.006), 0.05);
        const double gamma = 0.05;
        AmbiguitySet amb = AmbiguitySet::from_samples(atoms, 0.0);
        DroOptions opts;
        opts.box = box;
        opts.compute_mu = false;
        opts.warn_on_box = false;
        const DroSolution sol = solve_dro(net, amb, gamma, opts);
        const GridDroResult g = grid_dro(net, atoms, gamma, box, 1e-2);
        if ((sol.status == DroStatus::optimal) != g.feasible) {
            ++mismatched_status;
            continue;
        }
        if (!g.feasible) {
            continue;
        }
        ++compared;
        worst = std::max(worst, std::abs(sol.expected_cost - g.cost));
    }
    const bool ok = mismatched_status == 0 && compared >= instances && worst <= 1e-3;
    return {"dro_vs_grid", ok,
            std::to_string(compared) + " instances, max |cost diff| " + fmt(worst) +
                ", status mismatches " + std::to_string(mismatched_status) + " (tol 1e-3)"};
}

CheckResult check_transport(std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    int count = 0;
    for (double eps : {0.1, 0.5}) {
        for (int inst = 0; inst < 6; ++inst) {
            const std::size_t ns = 1 + static_cast<std::size_t>(inst % 3);
            const auto atoms = uniform_atoms(rng, ns);
            const AmbiguitySet amb = AmbiguitySet::from_samples(atoms, eps);
            const std::size_t j = static_cast<std::size_t>(inst % 5);
            const double xj = (inst % 2 == 0 ? 1.0 : -1.0) * uniform(rng, 0.2, 3.0);
            LiftedDecision x{Vector::Zero(6)};
            x.x[static_cast<Eigen::Index>(j)] = xj;
            const double mine = worst_case_cost(amb, x).value;
            std::vector<double> pts;
            for (const auto& a : atoms) pts.push_back(a[static_cast<Eigen::Index>(j)]);
            const std::vector<double> w(ns, 1.0 / static_cast<double>(ns));
            const double lp = transport_sup_1d(pts, w, amb.support_lo[static_cast<Eigen::Index>(j)],
                                               amb.support_hi[static_cast<Eigen::Index>(j)], xj,
                                               eps, 1500);
            worst = std::max(worst, std::abs(mine - lp));
            ++count;
        }
    }
    const std::vector<double> pa{0.0, 1.0};
    const std::vector<double> pb{0.0, 3.0};
    const std::vector<double> w{0.5, 0.5};
    const double w1_lp = transport_w1(pa, w, pb, w);
    const double w1 = wasserstein_1d(pa, w, pb, w);
    const bool w1_ok = std::abs(w1_lp - 1.0) <= 1e-12 && std::abs(w1 - 1.0) <= 1e-12;
    return {"worst_cost_vs_transport_lp", worst <= 1e-3 && w1_ok,
            std::to_string(count) + " instances at eps in {0.1, 0.5}, max |diff| " + fmt(worst) +
                " (tol 1e-3); W1 2x2 " + fmt(w1) + " vs lp " + fmt(w1_lp)};
}

CheckResult check_gradient(std::uint64_t seed, int instances) {
    Rng rng(seed);
    constexpr double h = 1e-5;
    double worst_co = 0.0;
    double worst_cc = 0.0;
    int done = 0;
    int active = 0;
    int attempts = 0;
    while (done < instances && attempts < 20 * instances) {
        ++attempts;
        const auto atoms = uniform_atoms(rng, 6 + static_cast<std::size_t>(attempts % 5));
        const NetworkModel net = single_node(0.004, 0.004, 0.05);
        const double eps = uniform(rng, 0.005, 0.03);
        const AmbiguitySet amb = AmbiguitySet::from_samples(atoms, eps);
        DroOptions opts;
        opts.warn_on_box = false;
        const DroSolution coarse = solve_dro(net, amb, 0.05, opts);
        if (coarse.status != DroStatus::optimal) {
            continue;
        }
        // Polish the optimum so the duals belong to the exact minimizer.
        DroOptions local = opts;
        local.warm_start = coarse.k;
        local.local_only = true;
        local.step0 = 1e-2;
        local.step_min = 1e-12;
        const DroSolution sol = solve_dro(net, amb, 0.05, local);
        if (sol.status != DroStatus::optimal) {
            continue;
        }
        const LiftedDecision x = lift(sol.k);
        const double up = worst_case_cost(amb.with_epsilon(eps + h), x).value;
        const double mid = worst_case_cost(amb, x).value;
        const double dn = worst_case_cost(amb.with_epsilon(eps - h), x).value;
        // Skip radii that sit on a kink of the piecewise-linear cost.
        if (rel_err((up - mid) / h, (mid - dn) / h) > 1e-6) {
            continue;
        }
        const double fd = (up - dn) / (2.0 * h);
        const double dual = sol.lambda_co.sum();
        worst_co = std::max(worst_co, rel_err(dual, fd));

        if (sol.mu > 0.0) {
            // The optimal value moves by (sum lambda_co + mu * sum lambda_cc) per unit radius.
            local.warm_start = sol.k;
            local.compute_mu = false;
            const DroSolution sp = solve_dro(net, amb.with_epsilon(eps + h), 0.05, local);
            const DroSolution sm = solve_dro(net, amb.with_epsilon(eps - h), 0.05, local);
            if (sp.status == DroStatus::optimal && sm.status == DroStatus::optimal) {
                const double fd_total = (sp.expected_cost - sm.expected_cost) / (2.0 * h);
                const double cc_term = sol.mu * sol.lambda_cc.sum();
                worst_cc = std::max(worst_cc, rel_err(cc_term, fd_total - dual));
                ++active;
            }
        }
        ++done;
    }
    const bool ok = done >= instances && worst_co < 1e-3 && worst_cc < 1e-3;
    return {"gradient_fd", ok,
            std::to_string(done) + " instances, cost term max rel err " + fmt(worst_co) + "; " +
                std::to_string(active) + " active, cvar term max rel err " + fmt(worst_cc) +
                " (tol 1e-3)"};
}

CheckResult check_learning(std::uint64_t seed, int instances) {
    Rng rng(seed);
    double worst_param = 0.0;
    double worst_resp = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        const double c = uniform(rng, 0.1, 5.0);
        const double d = uniform(rng, -2.0, 2.0);
        const double phi = uniform(rng, -1.5, 1.5);
        std::array<Observation, 2> obs;
        do {
            for (std::size_t s = 0; s < 2; ++s) {
                const double kp = uniform(rng, -5.0, 5.0);
                const double kq = uniform(rng, -5.0, 5.0);
                const auto [dp, dq] = surrogate_optimum(c, d, phi, kp, kq);
                obs[s].t = s;
                obs[s].k = {Vector::Constant(1, kp), Vector::Constant(1, kq)};
                obs[s].resp = {Vector::Constant(1, dp), Vector::Constant(1, dq)};
            }
        } while (std::abs(obs[0].resp.dp[0] - obs[1].resp.dp[0]) < 1e-3 ||
                 std::abs(obs[1].resp.dp[0]) < 1e-3);
        const double phi_hat = estimate_phi(obs[1], 0);
        const CdEstimate cd = estimate_cd(obs[0], obs[1], 0);
        worst_param = std::max({worst_param, rel_err(phi_hat, phi), rel_err(cd.c, c),
                                std::abs(cd.d - d) / std::max(1.0, std::abs(d))});
        const XiNode xi = build_xi(cd.c, cd.d, phi_hat);
        for (const auto& o : obs) {
            const auto [dp, dq] = kkt_response_map(xi, o.k.k_p[0], o.k.k_q[0]);
            worst_resp = std::max({worst_resp, std::abs(dp - o.resp.dp[0]), std::abs(dq - o.resp.dq[0])});
        }
    }
    const bool ok = worst_param <= 1e-9 && worst_resp <= 1e-12;
    return {"learning_round_trip", ok,
            std::to_string(instances) + " triples, params max rel err " + fmt(worst_param) +
                " (tol 1e-9), response max err " + fmt(worst_resp) + " (tol 1e-12)"};
}

CheckResult check_dera(std::uint64_t seed, int instances) {
    Rng rng(seed);
    constexpr std::size_t cells = 1000;
    double worst_ratio = 0.0;
    double agg_gap = 0.0;
    bool below = false;
    for (int inst = 0; inst < instances; ++inst) {
        DeraGroundTruth dera;
        const int units = 1 + inst % 3;
        for (int r = 0; r < units; ++r) {
            DerUnit u;
            u.s = uniform(rng, 0.0, 2.0);
            u.dp_min = uniform(rng, -1.0, 0.0);
            u.dp_max = uniform(rng, 0.0, 1.0);
            u.phi_min = uniform(rng, -1.0, 0.0);
            u.phi_max = uniform(rng, 0.0, 1.0);
            dera.units.push_back(u);
        }
        const double kp = uniform(rng, -3.0, 3.0);
        const double kq = uniform(rng, -3.0, 3.0);
        double exact = 0.0;
        double grid = 0.0;
        double tol = 0.0;
        for (const auto& u : dera.units) {
            exact += der_objective(u, kp, kq, der_best_response(u, kp, kq));
            grid += der_objective(u, kp, kq, der_grid(u, kp, kq, cells));
            // Grid spacing times the objective's Lipschitz bound on the cell.
            const double step_p = (u.dp_max - u.dp_min) / static_cast<double>(cells);
            const double phi_abs = std::max(std::abs(u.phi_min), std::abs(u.phi_max));
            const double dp_abs = std::max(std::abs(u.dp_min), std::abs(u.dp_max));
            const double step_q = (u.phi_max - u.phi_min) * dp_abs / static_cast<double>(cells);
            tol += step_p * (std::abs(u.s - kp) + std::abs(kq) * phi_abs) + step_q * std::abs(kq);
        }
        // The aggregate response must be the sum of the per-unit optima.
        const UnitResponse total = dera_respond(dera, kp, kq);
        double sum_dp = 0.0;
        double sum_dq = 0.0;
        for (const auto& u : dera.units) {
            const UnitResponse r = der_best_response(u, kp, kq);
            sum_dp += r.dp;
            sum_dq += r.dq;
        }
        agg_gap = std::max(agg_gap, std::abs(total.dp - sum_dp) + std::abs(total.dq - sum_dq));
        if (exact > grid + 1e-12) {
            below = true;
        }
        worst_ratio = std::max(worst_ratio, (grid - exact) / std::max(tol, 1e-300));
    }
    const bool ok = !below && worst_ratio <= 1.0 && agg_gap <= 1e-12;
    return {"dera_vs_grid", ok,
            std::to_string(instances) + " instances, exact never above grid: " +
                (below ? "no" : "yes") + ", max gap / tolerance " + fmt(worst_ratio) +
                ", aggregate mismatch " + fmt(agg_gap)};
}

CheckResult check_cvar(std::uint64_t seed, int instances) {
    Rng rng(seed);
    constexpr double step = 1e-4;
    double worst = 0.0;
    double worst_mean = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        const std::size_t n = 2 + static_cast<std::size_t>(inst % 9);
        const double gamma = uniform(rng, 0.02, 0.9);
        std::vector<double> losses;
        for (std::size_t i = 0; i < n; ++i) {
            losses.push_back(std::max(0.0, uniform(rng, -1.0, 1.0)));
        }
        const double mine = cvar_of_losses(losses, gamma);
        const double grid = cvar_tau_grid(losses, gamma, step);
        // A grid point lies within step/2 of the minimizer; slopes are bounded by 1.
        worst = std::max(worst, std::abs(mine - grid) / step);

        // gamma = 1 through the log path.
        InnerLoopLog log;
        double acc = 0.0;
        const NetworkModel net = single_node(0.004, 0.004, 0.01);
        for (std::size_t t = 0; t < n; ++t) {
            StepRecord st;
            st.k = {Vector::Constant(1, uniform(rng, -2.0, 2.0)), Vector::Constant(1, uniform(rng, -2.0, 2.0))};
            XiNode node{};
            for (auto& v : node) v = uniform(rng, -1.0, 2.0);
            st.xi.nodes = {node};
            st.rows = chance_rows(net, st.k);
            acc += step_violation(st);
            log.steps.push_back(st);
        }
        const double mean = acc / static_cast<double>(n);
        worst_mean = std::max(worst_mean, std::abs(actual_cvar(log, 1.0) - mean) /
                                              std::max(std::abs(mean), 1e-300));
    }
    const bool ok = worst <= 1.0 && worst_mean <= 1e-15;
    return {"cvar_vs_tau_grid", ok,
            std::to_string(instances) + " loss vectors, max |diff| / grid step " + fmt(worst) +
                " (tol 1), gamma=1 vs mean of positive parts max rel err " + fmt(worst_mean)};
}

CheckResult check_convexity(std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    int sweeps = 0;
    for (int inst = 0; inst < 50; ++inst) {
        LossTerms at;
        at.cost_gap = uniform(rng, -2.0, 2.0);
        at.cvar_exp = 0.0;
        at.cvar_act = std::max(0.0, uniform(rng, -0.01, 0.01));
        at.dcost = uniform(rng, 0.0, 5.0);
        at.dcvar = inst % 2 == 0 ? 0.0 : uniform(rng, 0.0, 2.0);
        const double eps0 = uniform(rng, 0.0, 0.05);
        constexpr int points = 501;
        constexpr double hi = 0.05;
        const double h = hi / (points - 1);
        for (int i = 1; i + 1 < points; ++i) {
            const double e = h * i;
            const double d2 = (linearized_loss(at, eps0, e + h) - 2.0 * linearized_loss(at, eps0, e) +
                               linearized_loss(at, eps0, e - h)) /
                              (h * h);
            worst = std::min(worst, d2);
        }
        ++sweeps;
    }
    return {"loss_convexity", worst >= -1e-8,
            std::to_string(sweeps) + " sweeps over [0, 0.05], min second difference " + fmt(worst) +
                " (tol -1e-8)"};
}

std::vector<CheckResult> run_cross_checks(std::uint64_t seed) {
    return {check_dro_grid(seed),       check_transport(seed + 1), check_gradient(seed + 2),
            check_learning(seed + 3),   check_dera(seed + 4),      check_cvar(seed + 5),
            check_convexity(seed + 6)};
}

}  // namespace dsolab::oracle
