#pragma once

#include "dsolab/dera.hpp"
#include "dsolab/netmodel.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

// Brute-force reference computations. Deliberately naive and independent of
// the production algorithms; used by tests and the `oracle` CLI subcommand.
namespace dsolab::oracle {

/// sup over distributions within W1 radius eps of the weighted atoms, of
/// E[x * xi], with xi restricted to a uniform grid on [lo, hi] (atoms added
/// to the grid). Solved as a transport LP.
double transport_sup_1d(const std::vector<double>& atoms, const std::vector<double>& weights,
                        double lo, double hi, double x, double eps, std::size_t grid);

/// W1 distance between two discrete distributions as a transport LP.
double transport_w1(const std::vector<double>& pa, const std::vector<double>& wa,
                    const std::vector<double>& pb, const std::vector<double>& wb);

/// Radius-zero incentive problem on (k_p, k_q) for one node: sample-average
/// cost and the CVaR constraint both evaluated from scratch.
struct GridDroResult {
    bool feasible = false;
    double k_p = 0.0;
    double k_q = 0.0;
    double cost = 0.0;
};

/// Sample average of the lifted cost at (k_p, k_q).
double sample_average_cost(const std::vector<Eigen::VectorXd>& samples, double k_p, double k_q);

/// min over tau of the radius-zero CVaR left side, by scanning every
/// breakpoint tau = D*a*xi + b.
double radius_zero_cvar(const NetworkModel& net, const std::vector<Eigen::VectorXd>& samples,
                        double gamma, double k_p, double k_q);

/// Grid search with `step` over [-box, box]^2, feasibility checked in order
/// of increasing cost, followed by successive local refinement.
GridDroResult grid_dro(const NetworkModel& net, const std::vector<Eigen::VectorXd>& samples,
                       double gamma, double box, double step);

/// Per-unit grid search over (dp, dq) with `cells` points per axis.
UnitResponse der_grid(const DerUnit& unit, double k_p, double k_q, std::size_t cells);

/// Sum of der_grid over units.
UnitResponse dera_grid(const DeraGroundTruth& dera, double k_p, double k_q, std::size_t cells);

/// min over a uniform tau grid of gamma*tau + mean(max(0, L - tau)).
double cvar_tau_grid(const std::vector<double>& losses, double gamma, double step);

/// LinDistFlow sensitivities by explicit path-set intersection.
Eigen::MatrixXd feeder_paths(const std::vector<double>& line_z, double v0);

}  // namespace dsolab::oracle
