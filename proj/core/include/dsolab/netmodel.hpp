#pragma once

#include "dsolab/types.hpp"

#include <cstddef>
#include <span>

namespace dsolab {

/// Per-node prices paid for active (k_p) and reactive (k_q) response.
/// Entries are sign-unconstrained.
struct Incentive {
    Vector k_p;
    Vector k_q;

    static Incentive zeros(std::size_t n_nodes);
    std::size_t size() const { return static_cast<std::size_t>(k_p.size()); }
};

/// Aggregate active/reactive response per node (per unit).
struct NodalResponse {
    Vector dp;
    Vector dq;

    static NodalResponse zeros(std::size_t n_nodes);
    std::size_t size() const { return static_cast<std::size_t>(dp.size()); }
};

/// Linearized distribution network: voltage change per unit of nodal
/// active/reactive injection plus the admissible voltage-change band.
///
/// Immutable once built; share freely between simulation runs.
class NetworkModel {
public:
    NetworkModel(Matrix alpha, Matrix beta, Vector dv_min, Vector dv_max);

    std::size_t n_nodes() const { return n_nodes_; }
    const Matrix& alpha() const { return alpha_; }
    const Matrix& beta() const { return beta_; }
    const Vector& dv_min() const { return dv_min_; }
    const Vector& dv_max() const { return dv_max_; }

    /// Same sensitivities, different voltage band (time-varying bounds).
    NetworkModel with_bounds(Vector dv_min, Vector dv_max) const;

private:
    std::size_t n_nodes_;
    Matrix alpha_;
    Matrix beta_;
    Vector dv_min_;
    Vector dv_max_;
};

/// dV = alpha * dp + beta * dq.
Vector voltage_change(const NetworkModel& net, const NodalResponse& resp);

/// Closed-interval check dv_min <= dv <= dv_max on every node.
bool voltage_feasible(const NetworkModel& net, const Vector& dv);

/// LinDistFlow-style sensitivities of a single radial chain feeder where
/// line l connects node l-1 to node l (node 0 is the substation):
///   alpha[n][m] = 2 * sum_{l in path(n) & path(m)} r_l / v0, beta likewise with x_l.
/// Voltage bounds default to +/-0.05 on every node.
NetworkModel radial_feeder_sensitivities(std::span<const double> line_r,
                                         std::span<const double> line_x, double v0);

NetworkModel radial_feeder_sensitivities(std::span<const double> line_r,
                                         std::span<const double> line_x, double v0,
                                         Vector dv_min, Vector dv_max);

}  // namespace dsolab
