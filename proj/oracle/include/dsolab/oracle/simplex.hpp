#pragma once

#include <Eigen/Dense>

#include <vector>

namespace dsolab::oracle {

struct LpResult {
    bool feasible = false;
    bool bounded = true;
    double value = 0.0;
    std::vector<double> x;
};

/// Dense two-phase simplex with Bland's rule:
///   maximize c.x  s.t.  A_eq x = b_eq,  A_le x <= b_le,  x >= 0.
/// Meant for small cross-check problems only.
LpResult simplex_max(const Eigen::MatrixXd& a_eq, const Eigen::VectorXd& b_eq,
                     const Eigen::MatrixXd& a_le, const Eigen::VectorXd& b_le,
                     const Eigen::VectorXd& c);

}  // namespace dsolab::oracle
