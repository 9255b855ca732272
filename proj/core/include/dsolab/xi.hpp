#pragma once

#include "dsolab/types.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace dsolab {

/// Five response coefficients of one node, ordered
///   [1/(2c), phi/(2c), phi^2/(2c), -d/(2c), -phi*d/(2c)]
/// so that dp = x0*k_p + x1*k_q + x3 and dq = x1*k_p + x2*k_q + x4.
using XiNode = std::array<double, 5>;

/// One realization of the per-node coefficient vectors.
struct XiSample {
    std::vector<XiNode> nodes;

    std::size_t n_nodes() const { return nodes.size(); }

    /// Coordinate-major stacking of length 6N: all nodes' first coefficient,
    /// then all second coefficients, ..., then N zeros.
    Vector stacked() const;

    /// Inverse of stacked(); the trailing block must be zero.
    static XiSample from_stacked(const Vector& xi, std::size_t n_nodes);

    bool all_finite() const;
};

/// Index of coefficient `coef` (0..5) of node `node` in the stacked layout.
inline std::size_t stacked_index(std::size_t coef, std::size_t node, std::size_t n_nodes) {
    return coef * n_nodes + node;
}

}  // namespace dsolab
