#pragma once

#include "dsolab/netmodel.hpp"
#include "dsolab/piecewise.hpp"
#include "dsolab/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsolab {

/// Wasserstein ball around the uniform mixture of sample atoms.
///
/// Every atom has length 6N; the trailing N coordinates are always zero and
/// their support is pinned to [0, 0].
struct AmbiguitySet {
    std::vector<Vector> samples;
    double epsilon = 0.0;
    Vector support_lo;
    Vector support_hi;

    std::size_t dim() const { return static_cast<std::size_t>(support_lo.size()); }
    std::size_t n_nodes() const { return dim() / 6; }

    /// Throws ConfigError on any broken invariant.
    void validate() const;

    AmbiguitySet with_epsilon(double eps) const;

    /// Support per coordinate is [min, max] of the atoms widened by
    /// margin * range on each side; a zero range falls back to +/-1.
    static AmbiguitySet from_samples(std::vector<Vector> samples, double epsilon,
                                     double margin = 0.25);
};

/// Monomials of the incentives, block-major:
///   [k_p^2, 2 k_p k_q, k_q^2, k_p, k_q, 1], each block of length N.
struct LiftedDecision {
    Vector x;
};

LiftedDecision lift(const Incentive& k);

/// W_n as a dense 6N x 6N matrix, so that (W_n x) . xi = dV_n.
Matrix voltage_block(const NetworkModel& net, std::size_t n);

/// W_n x without forming W_n; only the linear part of the incentives enters.
Vector voltage_row(const NetworkModel& net, const Incentive& k, std::size_t n);

/// Stacked chance-constraint rows: a row n is -(W_n x) with b = dv_min[n],
/// row N+n is +(W_n x) with b = -dv_max[n]. Feasible iff max_k(a_k xi + b_k) <= 0.
struct ChanceRows {
    Matrix a;
    Vector b;
};

ChanceRows chance_rows(const NetworkModel& net, const LiftedDecision& x);
ChanceRows chance_rows(const NetworkModel& net, const Incentive& k);

struct PartValue {
    double value = 0.0;
    Vector lambda;
};

/// Worst-case expected cost sup_{P in ball} E_P[x . xi] with the per-coordinate
/// dual multipliers, computed by the generic breakpoint walk.
PartValue worst_case_cost(const AmbiguitySet& amb, const LiftedDecision& x);

/// Same quantity per coordinate in closed form (used on the hot path):
///   x > 0: x * min(mean + eps, hi),  x < 0: x * max(mean - eps, lo).
struct CostCoordinate {
    double value = 0.0;
    double lambda = 0.0;
};
CostCoordinate cost_coordinate(double x, double mean, double lo, double hi, double eps);

/// Left side of the CVaR constraint at a fixed tau:
///   gamma*tau + sum_j min_{lambda >= 0} [lambda*eps + mean_i s_ji].
PartValue cvar_part(const AmbiguitySet& amb, const ChanceRows& rows, double tau, double gamma);

struct CvarMin {
    double value = 0.0;
    double tau = 0.0;
    Vector lambda;
};

/// min over tau of cvar_part.
CvarMin minimize_cvar(const AmbiguitySet& amb, const ChanceRows& rows, double gamma);

/// Reusable evaluator of the CVaR left side for one ambiguity set. Rows are
/// swapped in per candidate decision; buffers are reused. One per thread.
class CvarEvaluator {
public:
    CvarEvaluator(const AmbiguitySet& amb, double gamma);

    void set_rows(const ChanceRows& rows);

    struct Point {
        double value = 0.0;
        double slope = 0.0;  ///< a subgradient in tau
    };
    Point eval(double tau, bool want_slope = true);

    /// Exact minimization over tau. With `stop_below` set, returns as soon as a
    /// value <= *stop_below is seen or a lower bound above it is proven.
    struct Result {
        double value = 0.0;
        double tau = 0.0;
        bool exact = true;
    };
    Result minimize(std::optional<double> stop_below = std::nullopt,
                    std::optional<double> tau_hint = std::nullopt);

    /// Per-coordinate multipliers at the given tau.
    Vector lambdas(double tau);

    double gamma() const { return gamma_; }

private:
    Result minimize_radius_zero();
    void bracket(double& lo, double& hi) const;
    double coordinate(std::size_t j, double tau, bool want_slope, double& slope,
                      double* lambda);

    const AmbiguitySet& amb_;
    double gamma_;
    std::size_t dim_;
    std::size_t ns_;
    // Row-maximum l_j(xi) = max_k (a_kj xi + b_k / D) at atoms and support ends.
    Matrix at_atoms_;  // dim x ns
    Vector at_lo_;
    Vector at_hi_;
    Vector min_over_support_;
    std::vector<bool> flat_;
    Matrix dist_up_;    // hi_j - xi_ji
    Matrix dist_down_;  // xi_ji - lo_j
    std::vector<DualTerm> terms_;
    DualWorkspace ws_;
    std::vector<double> scratch_;
};

/// W1 distance between two weighted atom sets on the real line.
double wasserstein_1d(std::span<const double> pa, std::span<const double> wa,
                      std::span<const double> pb, std::span<const double> wb);

// ---------------------------------------------------------------------------
// Incentive design

struct DroOptions {
    double box = 10.0;            ///< incentives searched in [-box, box]
    std::size_t n_starts = 8;     ///< multi-start count (origin always included)
    std::uint64_t start_seed = 7;
    double step0 = 1.0;
    double step_min = 1e-7;
    double cvar_rhs = 0.0;        ///< constraint is cvar <= cvar_rhs
    double active_tol = 1e-9;
    std::optional<Incentive> warm_start;
    bool local_only = false;      ///< with warm_start: skip the multi-start sweep
    bool compute_mu = true;
    bool warn_on_box = true;      ///< log a warning when the optimum sits on the box
};

enum class DroStatus { optimal, infeasible };

struct DroSolution {
    DroStatus status = DroStatus::infeasible;
    Incentive k;
    double expected_cost = 0.0;
    double tau = 0.0;
    Vector lambda_co;
    Vector lambda_cc;
    double mu = 0.0;
    double cvar_value = 0.0;  ///< achieved left side of the CVaR constraint
    double cvar_exp = 0.0;    ///< 0 whenever the constraint holds
    bool at_box_boundary = false;
    std::size_t starts = 0;
    std::size_t cvar_evals = 0;
};

/// Minimizes the worst-case cost over incentives subject to the CVaR
/// constraint. Pure in its inputs.
DroSolution solve_dro(const NetworkModel& net, const AmbiguitySet& amb, double gamma,
                      const DroOptions& opts = {});

/// Multiplier of the CVaR constraint at `sol`. Zero when inactive; otherwise
/// from the stationarity condition, falling back to a relaxed re-solve.
/// Throws SensitivityError if neither estimate is usable.
double extract_mu(const NetworkModel& net, const AmbiguitySet& amb, double gamma,
                  const DroSolution& sol, const DroOptions& opts = {});

std::string to_string(DroStatus s);

}  // namespace dsolab
