#include "dsolab/dro.hpp"

#include "dsolab/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace dsolab {

namespace {

using Idx = Eigen::Index;

Incentive to_incentive(const Vector& z) {
    const Idx n = z.size() / 2;
    return {z.head(n), z.tail(n)};
}

Vector to_vector(const Incentive& k) {
    Vector z(2 * k.k_p.size());
    z << k.k_p, k.k_q;
    return z;
}

bool lex_less(const Vector& a, const Vector& b) {
    for (Idx i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) {
            return a[i] < b[i];
        }
    }
    return false;
}

class Problem {
public:
    Problem(const NetworkModel& net, const AmbiguitySet& amb, double gamma, const DroOptions& opts)
        : net_(net), amb_(amb), opts_(opts), cvar_(amb, gamma) {
        if (amb.n_nodes() != net.n_nodes()) {
            throw DimensionError("ambiguity set and network disagree on node count");
        }
        mean_ = Vector::Zero(static_cast<Idx>(amb.dim()));
        for (const auto& s : amb.samples) {
            mean_ += s;
        }
        mean_ /= static_cast<double>(amb.samples.size());
        const std::size_t m = 2 * net.n_nodes();
        for (std::size_t i = 0; i < m; ++i) {
            Vector e = Vector::Zero(static_cast<Idx>(m));
            e[static_cast<Idx>(i)] = 1.0;
            dirs_.push_back(e);
            dirs_.push_back(-e);
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                for (double si : {1.0, -1.0}) {
                    for (double sj : {1.0, -1.0}) {
                        Vector e = Vector::Zero(static_cast<Idx>(m));
                        e[static_cast<Idx>(i)] = si * M_SQRT1_2;
                        e[static_cast<Idx>(j)] = sj * M_SQRT1_2;
                        dirs_.push_back(e);
                    }
                }
            }
        }
    }

    std::size_t dim() const { return 2 * net_.n_nodes(); }

    double cost(const Vector& z) const {
        const Vector x = lift(to_incentive(z)).x;
        double v = 0.0;
        for (Idx j = 0; j < x.size(); ++j) {
            v += cost_coordinate(x[j], mean_[j], amb_.support_lo[j], amb_.support_hi[j],
                                 amb_.epsilon)
                     .value;
        }
        return v;
    }

    Vector cost_lambdas(const Vector& z) const {
        const Vector x = lift(to_incentive(z)).x;
        Vector lam(x.size());
        for (Idx j = 0; j < x.size(); ++j) {
            lam[j] = cost_coordinate(x[j], mean_[j], amb_.support_lo[j], amb_.support_hi[j],
                                     amb_.epsilon)
                         .lambda;
        }
        return lam;
    }

    /// CVaR left side minus the right-hand side. With `check` set, only the
    /// sign is reliable.
    double constraint(const Vector& z, bool check) {
        cvar_.set_rows(chance_rows(net_, to_incentive(z)));
        ++evals_;
        const auto r = check ? cvar_.minimize(opts_.cvar_rhs, tau_hint_) : cvar_.minimize();
        if (r.exact) {
            tau_hint_ = r.tau;
        }
        return r.value - opts_.cvar_rhs;
    }

    bool feasible(const Vector& z) { return constraint(z, true) <= 0.0; }

    Vector clamp(Vector z) const { return z.cwiseMax(-opts_.box).cwiseMin(opts_.box); }

    /// Feasible point on the segment anchor -> z close to the boundary
    /// (within `tol` in distance). Requires g(anchor) < 0 < g(z). With
    /// `accept_below` set, returns the first feasible point whose cost is lower.
    Vector project(const Vector& anchor, double g_anchor, const Vector& z, double g_z,
                   double tol = 1e-12, std::optional<double> accept_below = std::nullopt) {
        double s_in = 0.0;
        double s_out = 1.0;
        double g_in = g_anchor;
        double g_out = g_z;
        int side = 0;
        const double len = std::max((z - anchor).norm(), 1e-300);
        const int max_it = accept_below ? 12 : 100;
        for (int it = 0; it < max_it; ++it) {
            if ((s_out - s_in) * len <= tol || s_out - s_in <= 1e-13 || g_in == 0.0) {
                break;
            }
            double s = s_in + (s_out - s_in) * g_in / (g_in - g_out);
            if (!(s > s_in && s < s_out)) {
                s = 0.5 * (s_in + s_out);
            }
            const Vector zs = anchor + s * (z - anchor);
            const double g = constraint(zs, false);
            if (g <= 0.0) {
                if (accept_below && cost(zs) < *accept_below) {
                    return zs;
                }
                s_in = s;
                g_in = g;
                if (side == -1) {
                    g_out *= 0.5;
                }
                side = -1;
            } else {
                s_out = s;
                g_out = g;
                if (side == 1) {
                    g_in *= 0.5;
                }
                side = 1;
            }
        }
        return anchor + s_in * (z - anchor);
    }

    struct Local {
        Vector z;
        double f;
    };

    Local descend(Vector z, const Vector* anchor, double g_anchor) {
        double f = cost(z);
        double h = opts_.step0;
        std::size_t first = 0;
        while (h >= opts_.step_min) {
            bool moved = false;
            for (std::size_t c = 0; c < dirs_.size() && !moved; ++c) {
                const std::size_t di = (first + c) % dirs_.size();
                const Vector zc = clamp(z + h * dirs_[di]);
                if (zc == z) {
                    continue;
                }
                const double fc = cost(zc);
                if (!(fc < f)) {
                    continue;
                }
                // With an anchor the exact value is needed for the secant anyway.
                const double g_exact = constraint(zc, anchor == nullptr);
                if (g_exact <= 0.0) {
                    z = zc;
                    f = fc;
                    moved = true;
                    first = di;
                    continue;
                }
                if (anchor == nullptr) {
                    continue;
                }
                const Vector zb = project(*anchor, g_anchor, zc, g_exact, 1e-2 * h, f);
                const double fb = cost(zb);
                if (fb < f && zb != z) {
                    z = zb;
                    f = fb;
                    moved = true;
                    first = di;
                }
            }
            if (!moved) {
                h *= 0.5;
                for (const auto& o : optima_) {
                    if (f >= o.f && (z - o.z).norm() <= 2.0 * h) {
                        return {z, f};  // converging onto a known optimum
                    }
                }
            }
        }
        optima_.push_back({z, f});
        return {z, f};
    }

    /// Pattern search on the constraint alone; used to locate an interior point.
    Local descend_constraint(Vector z) {
        double g = constraint(z, false);
        double h = opts_.step0;
        while (h >= opts_.step_min && g > 0.0) {
            bool moved = false;
            for (const auto& d : dirs_) {
                const Vector zc = clamp(z + h * d);
                const double gc = constraint(zc, false);
                if (gc < g) {
                    z = zc;
                    g = gc;
                    moved = true;
                    break;
                }
            }
            if (!moved) {
                h *= 0.5;
            }
        }
        return {z, g};
    }

    std::size_t evals() const { return evals_; }
    double tau_hint() const { return tau_hint_.value_or(0.0); }
    CvarEvaluator& cvar() { return cvar_; }

private:
    const NetworkModel& net_;
    const AmbiguitySet& amb_;
    const DroOptions& opts_;
    CvarEvaluator cvar_;
    Vector mean_;
    std::vector<Vector> dirs_;
    std::optional<double> tau_hint_;
    std::size_t evals_ = 0;
    std::vector<Local> optima_;
};

std::vector<Vector> start_points(const DroOptions& opts, std::size_t m) {
    std::vector<Vector> starts;
    if (opts.warm_start) {
        starts.push_back(to_vector(*opts.warm_start));
        if (opts.local_only) {
            return starts;
        }
    }
    starts.push_back(Vector::Zero(static_cast<Idx>(m)));
    std::mt19937_64 rng(opts.start_seed);
    std::uniform_real_distribution<double> u(-0.5 * opts.box, 0.5 * opts.box);
    while (starts.size() < std::max<std::size_t>(opts.n_starts, 1) + (opts.warm_start ? 1 : 0)) {
        Vector z(static_cast<Idx>(m));
        for (Idx i = 0; i < z.size(); ++i) {
            z[i] = u(rng);
        }
        starts.push_back(z);
    }
    return starts;
}

}  // namespace

DroSolution solve_dro(const NetworkModel& net, const AmbiguitySet& amb, double gamma,
                      const DroOptions& opts) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ConfigError("gamma must lie in (0, 1)");
    }
    if (!(opts.box > 0.0) || !(opts.step0 > 0.0) || !(opts.step_min > 0.0)) {
        throw ConfigError("solver box and steps must be positive");
    }
    amb.validate();
    Problem prob(net, amb, gamma, opts);
    const std::size_t m = prob.dim();

    std::vector<Vector> starts = start_points(opts, m);
    for (auto& s : starts) {
        require_size(s, m, "warm start");
        s = prob.clamp(s);
    }
    if (opts.local_only && opts.warm_start) {
        starts.push_back(Vector::Zero(static_cast<Idx>(m)));  // anchor candidate only
    }
    std::vector<double> g(starts.size());
    std::size_t anchor_i = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        g[i] = prob.constraint(starts[i], false);
        if (g[i] < g[anchor_i]) {
            anchor_i = i;
        }
    }
    Vector anchor = starts[anchor_i];
    double g_anchor = g[anchor_i];
    if (g_anchor > 0.0) {
        const auto deep = prob.descend_constraint(anchor);
        anchor = deep.z;
        g_anchor = deep.f;
    }
    DroSolution sol;
    sol.starts = starts.size();
    if (g_anchor > 0.0) {
        sol.status = DroStatus::infeasible;
        sol.cvar_evals = prob.evals();
        sol.k = Incentive::zeros(net.n_nodes());
        return sol;
    }
    const bool interior = g_anchor < 0.0;
    const std::size_t n_descents = (opts.local_only && opts.warm_start) ? 1 : starts.size();

    bool have = false;
    Vector best_z;
    double best_f = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_descents; ++i) {
        Vector z0 = starts[i];
        if (g[i] > 0.0) {
            if (!interior) {
                continue;
            }
            z0 = prob.project(anchor, g_anchor, z0, g[i]);
        }
        const auto r = prob.descend(z0, interior ? &anchor : nullptr, g_anchor);
        if (!have || r.f < best_f || (r.f == best_f && lex_less(r.z, best_z))) {
            best_z = r.z;
            best_f = r.f;
            have = true;
        }
    }
    if (!have) {
        // Only the anchor is feasible.
        best_z = anchor;
        best_f = prob.cost(anchor);
        best_z = prob.descend(anchor, nullptr, g_anchor).z;
        best_f = prob.cost(best_z);
    }

    sol.status = DroStatus::optimal;
    sol.k = to_incentive(best_z);
    sol.expected_cost = best_f;
    sol.lambda_co = prob.cost_lambdas(best_z);
    prob.constraint(best_z, false);
    CvarEvaluator& ev = prob.cvar();
    const auto cm = ev.minimize();
    sol.tau = cm.tau;
    sol.cvar_value = cm.value;
    sol.lambda_cc = ev.lambdas(cm.tau);
    sol.cvar_exp = 0.0;
    sol.at_box_boundary = (best_z.cwiseAbs().array() >= opts.box * (1.0 - 1e-12)).any();
    if (sol.at_box_boundary && opts.warn_on_box) {
        spdlog::warn("incentive optimum lies on the search box boundary (box = {})", opts.box);
    }
    sol.cvar_evals = prob.evals();
    if (opts.compute_mu) {
        sol.mu = extract_mu(net, amb, gamma, sol, opts);
    }
    return sol;
}

double extract_mu(const NetworkModel& net, const AmbiguitySet& amb, double gamma,
                  const DroSolution& sol, const DroOptions& opts) {
    if (sol.status != DroStatus::optimal) {
        throw SensitivityError("multiplier requested for a non-optimal solution");
    }
    const double slack = opts.cvar_rhs - sol.cvar_value;
    if (slack > opts.active_tol * std::max(1.0, std::abs(opts.cvar_rhs))) {
        return 0.0;
    }
    Problem prob(net, amb, gamma, opts);
    const Vector z = to_vector(sol.k);
    const Idx m = z.size();
    Vector gf = Vector::Zero(m);
    Vector gg = Vector::Zero(m);
    for (Idx i = 0; i < m; ++i) {
        if (std::abs(z[i]) >= opts.box * (1.0 - 1e-12)) {
            continue;  // pinned by the box, not by the constraint
        }
        const double h = 1e-6 * std::max(1.0, std::abs(z[i]));
        Vector zp = z;
        Vector zm = z;
        zp[i] += h;
        zm[i] -= h;
        gf[i] = (prob.cost(zp) - prob.cost(zm)) / (2.0 * h);
        gg[i] = (prob.constraint(zp, false) - prob.constraint(zm, false)) / (2.0 * h);
    }
    const double gg2 = gg.squaredNorm();
    if (gg2 > 1e-20) {
        const double mu = std::max(0.0, -gf.dot(gg) / gg2);
        const double resid = (gf + mu * gg).norm();
        if (resid <= 1e-4 * std::max(1.0, gf.norm())) {
            return mu;
        }
    }
    // Shadow price: move the right-hand side both ways and re-solve locally.
    // The forward difference has an O(delta) curvature bias, so a central one
    // is used whenever the tightened problem is still feasible.
    constexpr double delta = 1e-6;
    DroOptions shifted = opts;
    shifted.warm_start = sol.k;
    shifted.local_only = true;
    shifted.compute_mu = false;
    shifted.warn_on_box = false;
    shifted.step0 = 1e-2;
    shifted.step_min = 1e-12;
    shifted.cvar_rhs = opts.cvar_rhs + delta;
    const DroSolution relaxed = solve_dro(net, amb, gamma, shifted);
    shifted.cvar_rhs = opts.cvar_rhs - delta;
    const DroSolution tight = solve_dro(net, amb, gamma, shifted);
    shifted.cvar_rhs = opts.cvar_rhs;
    const DroSolution base = solve_dro(net, amb, gamma, shifted);
    if (relaxed.status != DroStatus::optimal || !std::isfinite(relaxed.expected_cost) ||
        base.status != DroStatus::optimal) {
        throw SensitivityError("relaxed re-solve failed while estimating the multiplier");
    }
    const bool central = tight.status == DroStatus::optimal && std::isfinite(tight.expected_cost);
    const double mu = central ? (tight.expected_cost - relaxed.expected_cost) / (2.0 * delta)
                              : (base.expected_cost - relaxed.expected_cost) / delta;
    if (!std::isfinite(mu)) {
        throw SensitivityError("multiplier estimate is not finite");
    }
    return std::max(0.0, mu);
}

}  // namespace dsolab
