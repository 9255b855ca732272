#include "dsolab/xi.hpp"

#include "dsolab/errors.hpp"

#include <cmath>

namespace dsolab {

Vector XiSample::stacked() const {
    const std::size_t n = nodes.size();
    Vector out = Vector::Zero(static_cast<Eigen::Index>(6 * n));
    for (std::size_t node = 0; node < n; ++node) {
        for (std::size_t c = 0; c < 5; ++c) {
            out[static_cast<Eigen::Index>(stacked_index(c, node, n))] = nodes[node][c];
        }
    }
    return out;
}

XiSample XiSample::from_stacked(const Vector& xi, std::size_t n_nodes) {
    require_size(xi, 6 * n_nodes, "stacked xi");
    XiSample out;
    out.nodes.resize(n_nodes);
    for (std::size_t node = 0; node < n_nodes; ++node) {
        for (std::size_t c = 0; c < 5; ++c) {
            out.nodes[node][c] = xi[static_cast<Eigen::Index>(stacked_index(c, node, n_nodes))];
        }
        if (xi[static_cast<Eigen::Index>(stacked_index(5, node, n_nodes))] != 0.0) {
            throw DimensionError("stacked xi: trailing block must be zero");
        }
    }
    return out;
}

bool XiSample::all_finite() const {
    for (const auto& node : nodes) {
        for (double v : node) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace dsolab
