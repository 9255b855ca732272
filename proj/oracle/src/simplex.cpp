#include "dsolab/oracle/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsolab::oracle {

namespace {

constexpr double kTol = 1e-10;

struct Tableau {
    int m = 0;      // constraint rows
    int cols = 0;   // variables, rhs stored separately
    std::vector<std::vector<double>> t;  // m rows of cols coefficients
    std::vector<double> rhs;
    std::vector<double> red;  // reduced costs (maximize)
    double z = 0.0;
    std::vector<int> basis;

    void pivot(int r, int c) {
        const double p = t[r][c];
        for (double& v : t[r]) v /= p;
        rhs[r] /= p;
        for (int i = 0; i < m; ++i) {
            if (i == r) continue;
            const double f = t[i][c];
            if (f == 0.0) continue;
            for (int j = 0; j < cols; ++j) t[i][j] -= f * t[r][j];
            rhs[i] -= f * rhs[r];
        }
        const double f = red[c];
        if (f != 0.0) {
            for (int j = 0; j < cols; ++j) red[j] -= f * t[r][j];
            z += f * rhs[r];
        }
        basis[r] = c;
    }

    // Returns false when unbounded.
    bool run(const std::vector<bool>& allowed) {
        for (int guard = 0; guard < 100000; ++guard) {
            int enter = -1;
            for (int j = 0; j < cols; ++j) {
                if (allowed[j] && red[j] > kTol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (t[i][enter] > kTol) {
                    const double ratio = rhs[i] / t[i][enter];
                    if (ratio < best - kTol ||
                        (std::abs(ratio - best) <= kTol && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex iteration limit");
    }
};

}  // namespace

LpResult simplex_max(const Eigen::MatrixXd& a_eq, const Eigen::VectorXd& b_eq,
                     const Eigen::MatrixXd& a_le, const Eigen::VectorXd& b_le,
                     const Eigen::VectorXd& c) {
    const int n = static_cast<int>(c.size());
    const int me = static_cast<int>(a_eq.rows());
    const int ml = static_cast<int>(a_le.rows());
    if ((me > 0 && a_eq.cols() != n) || (ml > 0 && a_le.cols() != n) || b_eq.size() != me ||
        b_le.size() != ml) {
        throw std::invalid_argument("simplex_max: inconsistent dimensions");
    }
    Tableau tb;
    tb.m = me + ml;
    const int art0 = n + ml;
    tb.cols = art0 + tb.m;
    tb.t.assign(tb.m, std::vector<double>(tb.cols, 0.0));
    tb.rhs.assign(tb.m, 0.0);
    tb.basis.assign(tb.m, 0);
    for (int i = 0; i < tb.m; ++i) {
        auto& row = tb.t[i];
        double b = 0.0;
        if (i < me) {
            for (int j = 0; j < n; ++j) row[j] = a_eq(i, j);
            b = b_eq[i];
        } else {
            const int k = i - me;
            for (int j = 0; j < n; ++j) row[j] = a_le(k, j);
            row[n + k] = 1.0;
            b = b_le[k];
        }
        if (b < 0.0) {
            for (int j = 0; j < art0; ++j) row[j] = -row[j];
            b = -b;
        }
        row[art0 + i] = 1.0;
        tb.rhs[i] = b;
        tb.basis[i] = art0 + i;
    }
    // Phase 1: maximize -sum(artificials).
    tb.red.assign(tb.cols, 0.0);
    tb.z = 0.0;
    for (int i = 0; i < tb.m; ++i) {
        for (int j = 0; j < art0; ++j) tb.red[j] += tb.t[i][j];
        tb.z -= tb.rhs[i];
    }
    std::vector<bool> all(tb.cols, true);
    tb.run(all);
    LpResult out;
    if (tb.z < -1e-8) {
        out.feasible = false;
        return out;
    }
    for (int i = 0; i < tb.m; ++i) {
        if (tb.basis[i] < art0) continue;
        for (int j = 0; j < art0; ++j) {
            if (std::abs(tb.t[i][j]) > kTol) {
                tb.pivot(i, j);
                break;
            }
        }
    }
    // Phase 2.
    tb.red.assign(tb.cols, 0.0);
    for (int j = 0; j < n; ++j) tb.red[j] = c[j];
    tb.z = 0.0;
    for (int i = 0; i < tb.m; ++i) {
        const int b = tb.basis[i];
        const double cb = b < n ? c[b] : 0.0;
        if (cb == 0.0) continue;
        for (int j = 0; j < tb.cols; ++j) tb.red[j] -= cb * tb.t[i][j];
        tb.z += cb * tb.rhs[i];
    }
    std::vector<bool> allowed(tb.cols, true);
    for (int j = art0; j < tb.cols; ++j) allowed[j] = false;
    out.feasible = true;
    out.bounded = tb.run(allowed);
    out.x.assign(n, 0.0);
    for (int i = 0; i < tb.m; ++i) {
        if (tb.basis[i] < n) out.x[tb.basis[i]] = tb.rhs[i];
    }
    out.value = 0.0;
    for (int j = 0; j < n; ++j) out.value += c[j] * out.x[j];
    return out;
}

}  // namespace dsolab::oracle
