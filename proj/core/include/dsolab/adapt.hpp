#pragma once

#include "dsolab/dro.hpp"
#include "dsolab/netmodel.hpp"
#include "dsolab/xi.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dsolab {

/// One completed inner-loop step.
struct StepRecord {
    std::uint64_t t = 0;
    Incentive k;
    NodalResponse resp;
    double cost_exp = 0.0;
    double cost_act = 0.0;
    XiSample xi;       ///< realization behind the observed response
    ChanceRows rows;   ///< chance rows at the applied incentive and bounds
    Vector lambda_co;
    Vector lambda_cc;
    double mu = 0.0;
    double cvar_value = 0.0;  ///< achieved CVaR left side of the solve
};

struct InnerLoopLog {
    std::vector<StepRecord> steps;

    std::size_t size() const { return steps.size(); }
    bool empty() const { return steps.empty(); }
};

/// sum_n k_p*dP + k_q*dQ for one step.
double actual_cost(const StepRecord& step);

/// max(0, max_k(a_k . xi_t + b_k)) for one step.
double step_violation(const StepRecord& step);

/// min_tau gamma*tau + mean_t max(0, L_t - tau), exact over the loss breakpoints.
double cvar_of_losses(std::span<const double> losses, double gamma);

/// CVaR of the clipped per-step violations over the log.
double actual_cvar(const InnerLoopLog& log, double gamma);

/// argmin_t |cost_exp - cost_act|, ties to the earliest step (0-based).
std::size_t select_worst_time(const InnerLoopLog& log);

/// How the expected CVaR is read off the inner loop.
enum class CvarExpMode {
    convention,  ///< 0 whenever every solve was feasible
    achieved,    ///< mean of the achieved constraint left sides
};

double expected_cvar(const InnerLoopLog& log, CvarExpMode mode);

struct LossTerms {
    std::size_t t_worst = 0;
    double cost_gap = 0.0;   ///< cost_exp - cost_act at t_worst
    double cvar_exp = 0.0;
    double cvar_act = 0.0;
    double dcost = 0.0;      ///< sum_j lambda_co at t_worst
    double dcvar = 0.0;      ///< mean_t mu_t * sum_j lambda_cc
    double loss = 0.0;
    double grad_cost_term = 0.0;
    double grad_cvar_term = 0.0;

    double cvar_gap() const { return cvar_exp - cvar_act; }
    double grad() const { return grad_cost_term + grad_cvar_term; }
};

LossTerms loss_terms(const InnerLoopLog& log, double gamma,
                     CvarExpMode mode = CvarExpMode::convention);

double loss(const InnerLoopLog& log, double gamma, CvarExpMode mode = CvarExpMode::convention);
double gradient(const InnerLoopLog& log, double gamma,
                CvarExpMode mode = CvarExpMode::convention);

struct EpsilonRecord {
    std::uint64_t T = 0;
    double epsilon = 0.0;
    double loss = 0.0;
    double grad = 0.0;
};

struct EpsilonState {
    double epsilon = 0.0;
    double chi = 0.0;
    std::vector<EpsilonRecord> history;
};

/// epsilon' = max(0, epsilon - chi*grad); appends (T, epsilon', loss, grad).
EpsilonState update_epsilon(EpsilonState state, double grad, std::uint64_t T = 0,
                            double loss_value = 0.0);

struct Algorithm1Options {
    double gamma = 0.05;
    double chi = 0.001;
    std::size_t count_max = 50;
    double d_eps_min = 1e-6;
    CvarExpMode cvar_mode = CvarExpMode::convention;
};

/// Refreshed expected costs, one per logged step, for a trial radius.
using ResolveFn = std::function<std::vector<double>(double epsilon)>;

struct Algorithm1Result {
    double epsilon = 0.0;
    std::size_t iterations = 0;
    LossTerms entry;  ///< terms at the first gradient evaluation
    std::vector<double> path;
};

/// Gradient iterations on the radius. Actual cost/CVaR and the dual-based
/// partials are fixed at entry; each iteration refreshes the expected costs
/// through `resolve` and re-selects the worst-case step. The loop runs while
/// count < count_max and the last change exceeds d_eps_min, with the change
/// seeded by epsilon_T itself.
Algorithm1Result algorithm1(const InnerLoopLog& log, double epsilon_T, const ResolveFn& resolve,
                            const Algorithm1Options& opts);

/// Loss as a function of the radius with partials fixed: the first-order
/// model used to check convexity numerically.
double linearized_loss(const LossTerms& at, double eps0, double eps);

}  // namespace dsolab
