#include "dsolab/oracle/oracles.hpp"

#include "dsolab/oracle/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace dsolab::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double transport_sup_1d(const std::vector<double>& atoms, const std::vector<double>& weights,
                        double lo, double hi, double x, double eps, std::size_t grid) {
    std::vector<double> pts;
    for (std::size_t g = 0; g <= grid; ++g) {
        pts.push_back(lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid));
    }
    pts.insert(pts.end(), atoms.begin(), atoms.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const int na = static_cast<int>(atoms.size());
    const int np = static_cast<int>(pts.size());
    // Variables pi(i, g): mass moved from atom i to point g.
    MatrixXd a_eq = MatrixXd::Zero(na, na * np);
    VectorXd b_eq(na);
    MatrixXd a_le = MatrixXd::Zero(1, na * np);
    VectorXd b_le(1);
    VectorXd c(na * np);
    for (int i = 0; i < na; ++i) {
        b_eq[i] = weights[static_cast<std::size_t>(i)];
        for (int g = 0; g < np; ++g) {
            const int v = i * np + g;
            a_eq(i, v) = 1.0;
            a_le(0, v) = std::abs(pts[static_cast<std::size_t>(g)] - atoms[static_cast<std::size_t>(i)]);
            c[v] = x * pts[static_cast<std::size_t>(g)];
        }
    }
    b_le[0] = eps;
    const LpResult r = simplex_max(a_eq, b_eq, a_le, b_le, c);
    if (!r.feasible || !r.bounded) {
        throw std::runtime_error("transport_sup_1d: LP failed");
    }
    return r.value;
}

double transport_w1(const std::vector<double>& pa, const std::vector<double>& wa,
                    const std::vector<double>& pb, const std::vector<double>& wb) {
    const int na = static_cast<int>(pa.size());
    const int nb = static_cast<int>(pb.size());
    MatrixXd a_eq = MatrixXd::Zero(na + nb, na * nb);
    VectorXd b_eq(na + nb);
    VectorXd c(na * nb);
    for (int i = 0; i < na; ++i) {
        b_eq[i] = wa[static_cast<std::size_t>(i)];
        for (int j = 0; j < nb; ++j) {
            const int v = i * nb + j;
            a_eq(i, v) = 1.0;
            a_eq(na + j, v) = 1.0;
            c[v] = -std::abs(pa[static_cast<std::size_t>(i)] - pb[static_cast<std::size_t>(j)]);
        }
    }
    for (int j = 0; j < nb; ++j) b_eq[na + j] = wb[static_cast<std::size_t>(j)];
    const LpResult r = simplex_max(a_eq, b_eq, MatrixXd(0, na * nb), VectorXd(0), c);
    if (!r.feasible) {
        throw std::runtime_error("transport_w1: LP infeasible");
    }
    return -r.value;
}

double sample_average_cost(const std::vector<VectorXd>& samples, double k_p, double k_q) {
    const double x[6] = {k_p * k_p, 2.0 * k_p * k_q, k_q * k_q, k_p, k_q, 1.0};
    double acc = 0.0;
    for (const auto& s : samples) {
        for (int j = 0; j < 6; ++j) acc += x[j] * s[j];
    }
    return acc / static_cast<double>(samples.size());
}

double radius_zero_cvar(const NetworkModel& net, const std::vector<VectorXd>& samples,
                        double gamma, double k_p, double k_q) {
    const double a = net.alpha()(0, 0);
    const double b = net.beta()(0, 0);
    // dV = coefficient row . xi, written out from the response map.
    const double w[6] = {a * k_p, b * k_p + a * k_q, b * k_q, a, b, 0.0};
    const double rows[2][6] = {{-w[0], -w[1], -w[2], -w[3], -w[4], -w[5]},
                               {w[0], w[1], w[2], w[3], w[4], w[5]}};
    const double off[2] = {net.dv_min()[0], -net.dv_max()[0]};
    const double d = 6.0;
    std::vector<double> cand;
    for (const auto& s : samples) {
        for (int j = 0; j < 6; ++j) {
            for (int k = 0; k < 2; ++k) cand.push_back(d * rows[k][j] * s[j] + off[k]);
        }
    }
    const double ns = static_cast<double>(samples.size());
    double best = std::numeric_limits<double>::infinity();
    for (double tau : cand) {
        double v = gamma * tau;
        for (int j = 0; j < 6; ++j) {
            double acc = 0.0;
            for (const auto& s : samples) {
                double m = 0.0;
                for (int k = 0; k < 2; ++k) m = std::max(m, rows[k][j] * s[j] + (off[k] - tau) / d);
                acc += m;
            }
            v += acc / ns;
        }
        best = std::min(best, v);
    }
    return best;
}

GridDroResult grid_dro(const NetworkModel& net, const std::vector<VectorXd>& samples, double gamma,
                       double box, double step) {
    if (net.n_nodes() != 1) {
        throw std::invalid_argument("grid_dro handles a single node");
    }
    const int cells = static_cast<int>(std::llround(2.0 * box / step));
    struct P {
        double f, kp, kq;
    };
    std::vector<P> pts;
    pts.reserve(static_cast<std::size_t>((cells + 1) * (cells + 1)));
    for (int i = 0; i <= cells; ++i) {
        for (int j = 0; j <= cells; ++j) {
            const double kp = -box + step * i;
            const double kq = -box + step * j;
            pts.push_back({sample_average_cost(samples, kp, kq), kp, kq});
        }
    }
    std::sort(pts.begin(), pts.end(), [](const P& a, const P& b) {
        return a.f < b.f || (a.f == b.f && (a.kp < b.kp || (a.kp == b.kp && a.kq < b.kq)));
    });
    GridDroResult out;
    for (const auto& p : pts) {
        if (radius_zero_cvar(net, samples, gamma, p.kp, p.kq) <= 0.0) {
            out = {true, p.kp, p.kq, p.f};
            break;
        }
    }
    if (!out.feasible) {
        return out;
    }
    // Local refinement: shrink the window around the incumbent. Each level
    // re-centres until it stops improving so it can follow a thin feasible
    // sliver along the constraint boundary.
    double h = step;
    for (int level = 0; level < 6; ++level) {
        const double fine = h / 10.0;
        for (int pass = 0; pass < 1000; ++pass) {
            const double ckp = out.k_p;
            const double ckq = out.k_q;
            const double before = out.cost;
            for (int i = -10; i <= 10; ++i) {
                for (int j = -10; j <= 10; ++j) {
                    const double kp = std::clamp(ckp + fine * i, -box, box);
                    const double kq = std::clamp(ckq + fine * j, -box, box);
                    const double f = sample_average_cost(samples, kp, kq);
                    if (f < out.cost && radius_zero_cvar(net, samples, gamma, kp, kq) <= 0.0) {
                        out = {true, kp, kq, f};
                    }
                }
            }
            if (!(out.cost < before)) {
                break;
            }
        }
        h = fine;
    }
    return out;
}

UnitResponse der_grid(const DerUnit& u, double k_p, double k_q, std::size_t cells) {
    UnitResponse best{0.0, 0.0};
    double best_f = std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(cells);
    for (std::size_t a = 0; a <= cells; ++a) {
        const double dp = u.dp_min + (u.dp_max - u.dp_min) * static_cast<double>(a) / n;
        const double q1 = u.phi_min * dp;
        const double q2 = u.phi_max * dp;
        const double qlo = std::min(q1, q2);
        const double qhi = std::max(q1, q2);
        for (std::size_t b = 0; b <= cells; ++b) {
            const double dq = qlo + (qhi - qlo) * static_cast<double>(b) / n;
            const double f = u.s * dp - k_p * dp - k_q * dq;
            if (f < best_f) {
                best_f = f;
                best = {dp, dq};
            }
        }
    }
    return best;
}

UnitResponse dera_grid(const DeraGroundTruth& dera, double k_p, double k_q, std::size_t cells) {
    UnitResponse tot{0.0, 0.0};
    for (const auto& u : dera.units) {
        const UnitResponse r = der_grid(u, k_p, k_q, cells);
        tot.dp += r.dp;
        tot.dq += r.dq;
    }
    return tot;
}

double cvar_tau_grid(const std::vector<double>& losses, double gamma, double step) {
    const auto [mn, mx] = std::minmax_element(losses.begin(), losses.end());
    const double lo = *mn - 1.0;
    const double hi = *mx + 1.0;
    const auto cells = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g <= cells; ++g) {
        const double tau = lo + step * static_cast<double>(g);
        double acc = 0.0;
        for (double l : losses) acc += std::max(0.0, l - tau);
        best = std::min(best, gamma * tau + acc / static_cast<double>(losses.size()));
    }
    return best;
}

MatrixXd feeder_paths(const std::vector<double>& line_z, double v0) {
    const std::size_t n = line_z.size();
    std::vector<std::set<std::size_t>> path(n);
    for (std::size_t node = 0; node < n; ++node) {
        for (std::size_t l = 0; l <= node; ++l) path[node].insert(l);
    }
    MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            double acc = 0.0;
            for (std::size_t l : path[a]) {
                if (path[b].count(l)) acc += line_z[l];
            }
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 2.0 * acc / v0;
        }
    }
    return m;
}

}  // namespace dsolab::oracle
