#include "dsolab/adapt.hpp"

#include "dsolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dsolab {

double actual_cost(const StepRecord& step) {
    require_size(step.resp.dp, step.k.size(), "dP");
    require_size(step.resp.dq, step.k.size(), "dQ");
    return step.k.k_p.dot(step.resp.dp) + step.k.k_q.dot(step.resp.dq);
}

double step_violation(const StepRecord& step) {
    const Vector xi = step.xi.stacked();
    if (step.rows.a.cols() != xi.size()) {
        throw DimensionError("chance rows do not match the realization");
    }
    const Vector v = step.rows.a * xi + step.rows.b;
    return std::max(0.0, v.size() > 0 ? v.maxCoeff() : 0.0);
}

double cvar_of_losses(std::span<const double> losses, double gamma) {
    if (losses.empty()) {
        return 0.0;
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw ConfigError("gamma must lie in (0, 1]");
    }
    // Convex piecewise linear in tau; the minimum sits on a loss value.
    const double n = static_cast<double>(losses.size());
    double best = std::numeric_limits<double>::infinity();
    for (double tau : losses) {
        double acc = 0.0;
        for (double l : losses) {
            acc += std::max(0.0, l - tau);
        }
        best = std::min(best, gamma * tau + acc / n);
    }
    return best;
}

double actual_cvar(const InnerLoopLog& log, double gamma) {
    std::vector<double> losses;
    losses.reserve(log.size());
    for (const auto& s : log.steps) {
        losses.push_back(step_violation(s));
    }
    return cvar_of_losses(losses, gamma);
}

std::size_t select_worst_time(const InnerLoopLog& log) {
    if (log.empty()) {
        throw ConfigError("select_worst_time on an empty log");
    }
    std::size_t best = 0;
    double gap = std::abs(log.steps[0].cost_exp - log.steps[0].cost_act);
    for (std::size_t t = 1; t < log.size(); ++t) {
        const double g = std::abs(log.steps[t].cost_exp - log.steps[t].cost_act);
        if (g < gap) {
            gap = g;
            best = t;
        }
    }
    return best;
}

double expected_cvar(const InnerLoopLog& log, CvarExpMode mode) {
    if (mode == CvarExpMode::convention || log.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (const auto& s : log.steps) {
        acc += s.cvar_value;
    }
    return acc / static_cast<double>(log.size());
}

namespace {

double mean_cvar_partial(const InnerLoopLog& log) {
    double acc = 0.0;
    for (const auto& s : log.steps) {
        acc += s.mu * s.lambda_cc.sum();
    }
    return acc / static_cast<double>(log.size());
}

}  // namespace

LossTerms loss_terms(const InnerLoopLog& log, double gamma, CvarExpMode mode) {
    LossTerms out;
    out.t_worst = select_worst_time(log);
    const StepRecord& w = log.steps[out.t_worst];
    out.cost_gap = w.cost_exp - w.cost_act;
    out.cvar_exp = expected_cvar(log, mode);
    out.cvar_act = actual_cvar(log, gamma);
    out.dcost = w.lambda_co.sum();
    out.dcvar = mean_cvar_partial(log);
    out.loss = out.cost_gap * out.cost_gap + out.cvar_gap() * out.cvar_gap();
    out.grad_cost_term = 2.0 * out.cost_gap * out.dcost;
    out.grad_cvar_term = 2.0 * out.cvar_gap() * out.dcvar;
    return out;
}

double loss(const InnerLoopLog& log, double gamma, CvarExpMode mode) {
    return loss_terms(log, gamma, mode).loss;
}

double gradient(const InnerLoopLog& log, double gamma, CvarExpMode mode) {
    return loss_terms(log, gamma, mode).grad();
}

EpsilonState update_epsilon(EpsilonState state, double grad, std::uint64_t T, double loss_value) {
    if (!std::isfinite(grad)) {
        throw ConfigError("non-finite gradient");
    }
    state.epsilon = std::max(0.0, state.epsilon - state.chi * grad);
    state.history.push_back({T, state.epsilon, loss_value, grad});
    return state;
}

Algorithm1Result algorithm1(const InnerLoopLog& log, double epsilon_T, const ResolveFn& resolve,
                            const Algorithm1Options& opts) {
    if (log.empty()) {
        throw ConfigError("algorithm1 needs at least one completed inner-loop step");
    }
    InnerLoopLog work = log;
    Algorithm1Result out;
    out.entry = loss_terms(work, opts.gamma, opts.cvar_mode);
    const double cvar_act = out.entry.cvar_act;
    const double cvar_exp = out.entry.cvar_exp;
    const double dcvar = out.entry.dcvar;

    double eps = epsilon_T;
    double d_eps = epsilon_T;
    std::size_t count = 0;
    out.path.push_back(eps);
    while (count < opts.count_max && d_eps > opts.d_eps_min) {
        const std::size_t tw = select_worst_time(work);
        const StepRecord& w = work.steps[tw];
        const double grad = 2.0 * (w.cost_exp - w.cost_act) * w.lambda_co.sum() +
                            2.0 * (cvar_exp - cvar_act) * dcvar;
        const double next = std::max(0.0, eps - opts.chi * grad);
        if (next != eps) {
            const std::vector<double> refreshed = resolve(next);
            if (refreshed.size() != work.size()) {
                throw DimensionError("resolve returned the wrong number of costs");
            }
            for (std::size_t t = 0; t < work.size(); ++t) {
                work.steps[t].cost_exp = refreshed[t];
            }
        }
        d_eps = std::abs(eps - next);
        eps = next;
        ++count;
        out.path.push_back(eps);
    }
    out.epsilon = eps;
    out.iterations = count;
    return out;
}

double linearized_loss(const LossTerms& at, double eps0, double eps) {
    const double dc = at.cost_gap + at.dcost * (eps - eps0);
    const double dv = at.cvar_gap() + at.dcvar * (eps - eps0);
    return dc * dc + dv * dv;
}

}  // namespace dsolab
