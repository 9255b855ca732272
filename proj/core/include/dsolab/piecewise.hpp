#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace dsolab {

/// One summand of the dual problem
///   f(lambda) = max(p, u - lambda*du, l - lambda*dl),   du, dl >= 0.
struct DualTerm {
    double p = 0.0;
    double u = 0.0;
    double du = 0.0;
    double l = 0.0;
    double dl = 0.0;
};

struct DualMin {
    double value = 0.0;   ///< lambda*eps + mean_i f_i(lambda)
    double lambda = 0.0;  ///< smallest minimizer
};

/// Scratch buffers reused across calls. Not thread-safe; one per thread.
struct DualWorkspace {
    struct Event {
        double at;
        double rise;
    };
    std::vector<Event> events;
    /// Primal mass on (p, u, l) per term, filled when requested.
    std::vector<std::array<double, 3>> mass;
    std::vector<std::array<int, 2>> pick;
};

/// Minimizes lambda*eps + (1/n) * sum_i f_i(lambda) over lambda >= 0 by walking
/// the breakpoints of the convex piecewise-linear objective from the right.
/// With want_mass set, ws.mass receives an optimal transport split: the mass
/// each atom keeps (p) or sends to the upper (u) / lower (l) support end.
DualMin minimize_dual(std::span<const DualTerm> terms, double eps, DualWorkspace& ws,
                      bool want_mass = false);

/// Value of one term at lambda.
inline double dual_term_value(const DualTerm& t, double lambda) {
    const double a = t.u - lambda * t.du;
    const double b = t.l - lambda * t.dl;
    const double m = a > b ? a : b;
    return t.p > m ? t.p : m;
}

}  // namespace dsolab
