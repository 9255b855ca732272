#include "dsolab/netmodel.hpp"

#include "dsolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dsolab {

void require_size(const Vector& v, std::size_t expected, const std::string& what) {
    if (static_cast<std::size_t>(v.size()) != expected) {
        throw DimensionError(what + ": expected " + std::to_string(expected) + " entries, got " +
                             std::to_string(v.size()));
    }
}

Incentive Incentive::zeros(std::size_t n_nodes) {
    return {Vector::Zero(static_cast<Eigen::Index>(n_nodes)),
            Vector::Zero(static_cast<Eigen::Index>(n_nodes))};
}

NodalResponse NodalResponse::zeros(std::size_t n_nodes) {
    return {Vector::Zero(static_cast<Eigen::Index>(n_nodes)),
            Vector::Zero(static_cast<Eigen::Index>(n_nodes))};
}

NetworkModel::NetworkModel(Matrix alpha, Matrix beta, Vector dv_min, Vector dv_max)
    : n_nodes_(static_cast<std::size_t>(alpha.rows())),
      alpha_(std::move(alpha)),
      beta_(std::move(beta)),
      dv_min_(std::move(dv_min)),
      dv_max_(std::move(dv_max)) {
    if (n_nodes_ == 0) {
        throw ConfigError("network must have at least one node");
    }
    const auto n = static_cast<Eigen::Index>(n_nodes_);
    if (alpha_.cols() != n || beta_.rows() != n || beta_.cols() != n) {
        throw DimensionError("alpha and beta must both be " + std::to_string(n_nodes_) + "x" +
                             std::to_string(n_nodes_));
    }
    require_size(dv_min_, n_nodes_, "dv_min");
    require_size(dv_max_, n_nodes_, "dv_max");
    if (!alpha_.allFinite() || !beta_.allFinite() || !dv_min_.allFinite() ||
        !dv_max_.allFinite()) {
        throw ConfigError("network data must be finite");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (dv_min_[i] > dv_max_[i]) {
            throw ConfigError("dv_min exceeds dv_max at node " + std::to_string(i));
        }
    }
}

NetworkModel NetworkModel::with_bounds(Vector dv_min, Vector dv_max) const {
    return NetworkModel(alpha_, beta_, std::move(dv_min), std::move(dv_max));
}

Vector voltage_change(const NetworkModel& net, const NodalResponse& resp) {
    require_size(resp.dp, net.n_nodes(), "dp");
    require_size(resp.dq, net.n_nodes(), "dq");
    return net.alpha() * resp.dp + net.beta() * resp.dq;
}

bool voltage_feasible(const NetworkModel& net, const Vector& dv) {
    if (static_cast<std::size_t>(dv.size()) != net.n_nodes()) {
        return false;
    }
    for (Eigen::Index i = 0; i < dv.size(); ++i) {
        if (!(dv[i] >= net.dv_min()[i] && dv[i] <= net.dv_max()[i])) {
            return false;
        }
    }
    return true;
}

NetworkModel radial_feeder_sensitivities(std::span<const double> line_r,
                                         std::span<const double> line_x, double v0) {
    const auto n = static_cast<Eigen::Index>(line_r.size());
    return radial_feeder_sensitivities(line_r, line_x, v0, Vector::Constant(n, -0.05),
                                       Vector::Constant(n, 0.05));
}

NetworkModel radial_feeder_sensitivities(std::span<const double> line_r,
                                         std::span<const double> line_x, double v0,
                                         Vector dv_min, Vector dv_max) {
    if (line_r.empty() || line_r.size() != line_x.size()) {
        throw DimensionError("feeder needs one (r, x) pair per line and at least one line");
    }
    if (!(v0 > 0.0) || !std::isfinite(v0)) {
        throw ConfigError("feeder base voltage must be positive");
    }
    for (std::size_t l = 0; l < line_r.size(); ++l) {
        if (!(line_r[l] > 0.0) || !(line_x[l] > 0.0) || !std::isfinite(line_r[l]) ||
            !std::isfinite(line_x[l])) {
            throw ConfigError("line impedances must be positive, line " + std::to_string(l));
        }
    }
    const auto n = static_cast<Eigen::Index>(line_r.size());
    // Path of node n in a chain is lines 0..n, so the shared path of (n, m)
    // is lines 0..min(n, m): a prefix sum.
    Vector r_prefix(n);
    Vector x_prefix(n);
    double r_acc = 0.0;
    double x_acc = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
        r_acc += line_r[static_cast<std::size_t>(l)];
        x_acc += line_x[static_cast<std::size_t>(l)];
        r_prefix[l] = r_acc;
        x_prefix[l] = x_acc;
    }
    Matrix alpha(n, n);
    Matrix beta(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::Index shared = std::min(i, j);
            alpha(i, j) = 2.0 * r_prefix[shared] / v0;
            beta(i, j) = 2.0 * x_prefix[shared] / v0;
        }
    }
    return NetworkModel(std::move(alpha), std::move(beta), std::move(dv_min), std::move(dv_max));
}

}  // namespace dsolab
