#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>

namespace dsolab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Throws DimensionError when `v` does not have `expected` entries.
void require_size(const Vector& v, std::size_t expected, const std::string& what);

}  // namespace dsolab
