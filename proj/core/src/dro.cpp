#include "dsolab/dro.hpp"

#include "dsolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dsolab {

namespace {

using Idx = Eigen::Index;

Idx ix(std::size_t i) { return static_cast<Idx>(i); }

}  // namespace

// ---------------------------------------------------------------------------
// AmbiguitySet

void AmbiguitySet::validate() const {
    const std::size_t d = dim();
    if (d == 0 || d % 6 != 0) {
        throw ConfigError("ambiguity set dimension must be a positive multiple of 6");
    }
    if (static_cast<std::size_t>(support_hi.size()) != d) {
        throw DimensionError("support bounds differ in length");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("epsilon must be finite and nonnegative");
    }
    if (samples.empty()) {
        throw ConfigError("ambiguity set has no samples");
    }
    const std::size_t n = d / 6;
    for (std::size_t j = 0; j < d; ++j) {
        if (!(support_lo[ix(j)] <= support_hi[ix(j)])) {
            throw ConfigError("support_lo exceeds support_hi at coordinate " + std::to_string(j));
        }
        if (j >= 5 * n && (support_lo[ix(j)] != 0.0 || support_hi[ix(j)] != 0.0)) {
            throw ConfigError("trailing support must be [0, 0]");
        }
    }
    for (const auto& s : samples) {
        require_size(s, d, "ambiguity sample");
        for (std::size_t j = 0; j < d; ++j) {
            const double v = s[ix(j)];
            if (!std::isfinite(v)) {
                throw ConfigError("non-finite sample coordinate");
            }
            const double slack = 1e-12 * std::max(1.0, std::abs(v));
            if (v < support_lo[ix(j)] - slack || v > support_hi[ix(j)] + slack) {
                throw ConfigError("sample outside support at coordinate " + std::to_string(j));
            }
        }
    }
}

AmbiguitySet AmbiguitySet::with_epsilon(double eps) const {
    AmbiguitySet out = *this;
    out.epsilon = eps;
    return out;
}

AmbiguitySet AmbiguitySet::from_samples(std::vector<Vector> samples, double epsilon,
                                        double margin) {
    if (samples.empty()) {
        throw ConfigError("ambiguity set needs at least one sample");
    }
    if (!(margin >= 0.0)) {
        throw ConfigError("support margin must be nonnegative");
    }
    const Idx d = samples.front().size();
    if (d == 0 || d % 6 != 0) {
        throw DimensionError("sample length must be a positive multiple of 6");
    }
    Vector lo = samples.front();
    Vector hi = samples.front();
    for (const auto& s : samples) {
        require_size(s, static_cast<std::size_t>(d), "ambiguity sample");
        lo = lo.cwiseMin(s);
        hi = hi.cwiseMax(s);
    }
    const Idx n = d / 6;
    for (Idx j = 0; j < d; ++j) {
        if (j >= 5 * n) {
            lo[j] = 0.0;
            hi[j] = 0.0;
            continue;
        }
        const double range = hi[j] - lo[j];
        if (range > 0.0) {
            lo[j] -= margin * range;
            hi[j] += margin * range;
        } else {
            lo[j] -= 1.0;
            hi[j] += 1.0;
        }
    }
    AmbiguitySet out{std::move(samples), epsilon, std::move(lo), std::move(hi)};
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Lifting and chance rows

LiftedDecision lift(const Incentive& k) {
    const Idx n = k.k_p.size();
    if (k.k_q.size() != n) {
        throw DimensionError("k_p and k_q differ in length");
    }
    Vector x(6 * n);
    x.segment(0, n) = k.k_p.array().square();
    x.segment(n, n) = 2.0 * k.k_p.array() * k.k_q.array();
    x.segment(2 * n, n) = k.k_q.array().square();
    x.segment(3 * n, n) = k.k_p;
    x.segment(4 * n, n) = k.k_q;
    x.segment(5 * n, n).setOnes();
    return {x};
}

Matrix voltage_block(const NetworkModel& net, std::size_t node) {
    const Idx n = ix(net.n_nodes());
    if (ix(node) >= n) {
        throw DimensionError("voltage_block: node out of range");
    }
    const Matrix a = net.alpha().row(ix(node)).transpose().asDiagonal();
    const Matrix b = net.beta().row(ix(node)).transpose().asDiagonal();
    Matrix w = Matrix::Zero(6 * n, 6 * n);
    w.block(0, 3 * n, n, n) = a;
    w.block(n, 3 * n, n, n) = b;
    w.block(n, 4 * n, n, n) = a;
    w.block(2 * n, 4 * n, n, n) = b;
    w.block(3 * n, 5 * n, n, n) = a;
    w.block(4 * n, 5 * n, n, n) = b;
    return w;
}

Vector voltage_row(const NetworkModel& net, const Incentive& k, std::size_t node) {
    const Idx n = ix(net.n_nodes());
    if (ix(node) >= n) {
        throw DimensionError("voltage_row: node out of range");
    }
    require_size(k.k_p, net.n_nodes(), "k_p");
    require_size(k.k_q, net.n_nodes(), "k_q");
    const auto a = net.alpha().row(ix(node)).transpose().array();
    const auto b = net.beta().row(ix(node)).transpose().array();
    Vector w = Vector::Zero(6 * n);
    w.segment(0, n) = a * k.k_p.array();
    w.segment(n, n) = b * k.k_p.array() + a * k.k_q.array();
    w.segment(2 * n, n) = b * k.k_q.array();
    w.segment(3 * n, n) = a;
    w.segment(4 * n, n) = b;
    return w;
}

ChanceRows chance_rows(const NetworkModel& net, const LiftedDecision& x) {
    const Idx n = ix(net.n_nodes());
    require_size(x.x, 6 * net.n_nodes(), "lifted decision");
    ChanceRows rows{Matrix(2 * n, 6 * n), Vector(2 * n)};
    for (Idx node = 0; node < n; ++node) {
        const Vector w = voltage_block(net, static_cast<std::size_t>(node)) * x.x;
        rows.a.row(node) = -w.transpose();
        rows.a.row(n + node) = w.transpose();
        rows.b[node] = net.dv_min()[node];
        rows.b[n + node] = -net.dv_max()[node];
    }
    return rows;
}

ChanceRows chance_rows(const NetworkModel& net, const Incentive& k) {
    const Idx n = ix(net.n_nodes());
    ChanceRows rows{Matrix(2 * n, 6 * n), Vector(2 * n)};
    for (Idx node = 0; node < n; ++node) {
        const Vector w = voltage_row(net, k, static_cast<std::size_t>(node));
        rows.a.row(node) = -w.transpose();
        rows.a.row(n + node) = w.transpose();
        rows.b[node] = net.dv_min()[node];
        rows.b[n + node] = -net.dv_max()[node];
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Cost part

PartValue worst_case_cost(const AmbiguitySet& amb, const LiftedDecision& x) {
    amb.validate();
    const std::size_t d = amb.dim();
    require_size(x.x, d, "lifted decision");
    const std::size_t ns = amb.samples.size();
    PartValue out{0.0, Vector::Zero(ix(d))};
    std::vector<DualTerm> terms(ns);
    DualWorkspace ws;
    for (std::size_t j = 0; j < d; ++j) {
        const double xj = x.x[ix(j)];
        const double lo = amb.support_lo[ix(j)];
        const double hi = amb.support_hi[ix(j)];
        for (std::size_t i = 0; i < ns; ++i) {
            const double s = amb.samples[i][ix(j)];
            terms[i] = {xj * s, xj * hi, hi - s, xj * lo, s - lo};
        }
        const DualMin m = minimize_dual(terms, amb.epsilon, ws);
        out.value += m.value;
        out.lambda[ix(j)] = m.lambda;
    }
    return out;
}

CostCoordinate cost_coordinate(double x, double mean, double lo, double hi, double eps) {
    if (x > 0.0) {
        if (eps < hi - mean) {
            return {x * (mean + eps), x};
        }
        return {x * hi, 0.0};
    }
    if (x < 0.0) {
        if (eps < mean - lo) {
            return {x * (mean - eps), -x};
        }
        return {x * lo, 0.0};
    }
    return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// CVaR part

CvarEvaluator::CvarEvaluator(const AmbiguitySet& amb, double gamma)
    : amb_(amb), gamma_(gamma), dim_(amb.dim()), ns_(amb.samples.size()) {
    amb_.validate();
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw ConfigError("gamma must lie in (0, 1]");
    }
    dist_up_.resize(ix(dim_), ix(ns_));
    dist_down_.resize(ix(dim_), ix(ns_));
    for (std::size_t i = 0; i < ns_; ++i) {
        dist_up_.col(ix(i)) = amb_.support_hi - amb_.samples[i];
        dist_down_.col(ix(i)) = amb_.samples[i] - amb_.support_lo;
    }
    at_atoms_.resize(ix(dim_), ix(ns_));
    at_lo_.resize(ix(dim_));
    at_hi_.resize(ix(dim_));
    min_over_support_.resize(ix(dim_));
    flat_.assign(dim_, true);
    terms_.resize(ns_);
}

void CvarEvaluator::set_rows(const ChanceRows& rows) {
    require_size(rows.b, static_cast<std::size_t>(rows.a.rows()), "chance offsets");
    if (static_cast<std::size_t>(rows.a.cols()) != dim_) {
        throw DimensionError("chance rows do not match the ambiguity set dimension");
    }
    const Idx k_rows = rows.a.rows();
    if (k_rows == 0) {
        throw DimensionError("chance rows are empty");
    }
    const double inv_d = 1.0 / static_cast<double>(dim_);
    const Vector c = rows.b * inv_d;
    for (std::size_t jj = 0; jj < dim_; ++jj) {
        const Idx j = ix(jj);
        const auto col = rows.a.col(j);
        const auto ell = [&](double xi) {
            double m = -std::numeric_limits<double>::infinity();
            for (Idx k = 0; k < k_rows; ++k) {
                m = std::max(m, col[k] * xi + c[k]);
            }
            return m;
        };
        flat_[jj] = col.isZero(0.0);
        const double lo = amb_.support_lo[j];
        const double hi = amb_.support_hi[j];
        at_lo_[j] = ell(lo);
        at_hi_[j] = ell(hi);
        if (flat_[jj]) {
            at_atoms_.row(j).setConstant(at_lo_[j]);
            min_over_support_[j] = at_lo_[j];
            continue;
        }
        for (std::size_t i = 0; i < ns_; ++i) {
            at_atoms_(j, ix(i)) = ell(amb_.samples[i][j]);
        }
        double m = std::min(at_lo_[j], at_hi_[j]);
        for (Idx k1 = 0; k1 < k_rows; ++k1) {
            for (Idx k2 = k1 + 1; k2 < k_rows; ++k2) {
                const double ds = col[k1] - col[k2];
                if (ds == 0.0) {
                    continue;
                }
                const double xi = (c[k2] - c[k1]) / ds;
                if (xi > lo && xi < hi) {
                    m = std::min(m, ell(xi));
                }
            }
        }
        min_over_support_[j] = m;
    }
}

double CvarEvaluator::coordinate(std::size_t jj, double tau, bool want_slope, double& slope,
                                 double* lambda) {
    const Idx j = ix(jj);
    const double inv_d = 1.0 / static_cast<double>(dim_);
    const double shift = tau * inv_d;
    slope = 0.0;
    if (lambda != nullptr) {
        *lambda = 0.0;
    }
    if (flat_[jj]) {
        const double v = at_lo_[j] - shift;
        if (v > 0.0) {
            slope = -inv_d;
            return v;
        }
        return 0.0;
    }
    const double eps = amb_.epsilon;
    if (eps == 0.0 && lambda == nullptr) {
        // Radius zero: the dual settles on the sample average.
        double acc = 0.0;
        std::size_t pos = 0;
        for (std::size_t i = 0; i < ns_; ++i) {
            const double v = at_atoms_(j, ix(i)) - shift;
            if (v > 0.0) {
                acc += v;
                ++pos;
            }
        }
        const double inv_n = 1.0 / static_cast<double>(ns_);
        slope = -inv_d * static_cast<double>(pos) * inv_n;
        return acc * inv_n;
    }
    const double up = std::max(0.0, at_hi_[j] - shift);
    const double down = std::max(0.0, at_lo_[j] - shift);
    if (up == 0.0 && down == 0.0) {
        // The row maximum peaks at a support end, so every atom is inactive too.
        return 0.0;
    }
    for (std::size_t i = 0; i < ns_; ++i) {
        terms_[i] = {std::max(0.0, at_atoms_(j, ix(i)) - shift), up, dist_up_(j, ix(i)), down,
                     dist_down_(j, ix(i))};
    }
    const DualMin m = minimize_dual(terms_, eps, ws_, want_slope);
    if (lambda != nullptr) {
        *lambda = m.lambda;
    }
    if (want_slope) {
        const bool up_on = at_hi_[j] - shift > 0.0;
        const bool down_on = at_lo_[j] - shift > 0.0;
        double active = 0.0;
        for (std::size_t i = 0; i < ns_; ++i) {
            const auto& w = ws_.mass[i];
            if (at_atoms_(j, ix(i)) - shift > 0.0) {
                active += w[0];
            }
            if (up_on) {
                active += w[1];
            }
            if (down_on) {
                active += w[2];
            }
        }
        slope = -inv_d * active / static_cast<double>(ns_);
    }
    return m.value;
}

CvarEvaluator::Point CvarEvaluator::eval(double tau, bool want_slope) {
    Point p{gamma_ * tau, gamma_};
    for (std::size_t j = 0; j < dim_; ++j) {
        double s = 0.0;
        p.value += coordinate(j, tau, want_slope, s, nullptr);
        p.slope += s;
    }
    if (!want_slope) {
        p.slope = 0.0;
    }
    return p;
}

Vector CvarEvaluator::lambdas(double tau) {
    Vector out(ix(dim_));
    for (std::size_t j = 0; j < dim_; ++j) {
        double s = 0.0;
        double lam = 0.0;
        coordinate(j, tau, false, s, &lam);
        out[ix(j)] = lam;
    }
    return out;
}

void CvarEvaluator::bracket(double& lo, double& hi) const {
    const double d = static_cast<double>(dim_);
    lo = d * min_over_support_.minCoeff();
    hi = d * at_lo_.cwiseMax(at_hi_).maxCoeff();
}

CvarEvaluator::Result CvarEvaluator::minimize_radius_zero() {
    // gamma*tau + (1/M) sum over all (j, i) of max(0, g - tau): an upper quantile.
    const double d = static_cast<double>(dim_);
    scratch_.clear();
    scratch_.reserve(dim_ * ns_);
    for (std::size_t j = 0; j < dim_; ++j) {
        for (std::size_t i = 0; i < ns_; ++i) {
            scratch_.push_back(d * at_atoms_(ix(j), ix(i)));
        }
    }
    const std::size_t m = scratch_.size();
    const auto r = static_cast<std::size_t>(std::floor(gamma_ * static_cast<double>(m)));
    double tau = 0.0;
    if (r >= m) {
        tau = *std::min_element(scratch_.begin(), scratch_.end());
    } else {
        std::nth_element(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                         scratch_.end(), std::greater<>());
        tau = scratch_[r];
    }
    double acc = 0.0;
    for (double g : scratch_) {
        acc += std::max(0.0, g - tau);
    }
    return {gamma_ * tau + acc / static_cast<double>(m), tau, true};
}

CvarEvaluator::Result CvarEvaluator::minimize(std::optional<double> stop_below,
                                              std::optional<double> tau_hint) {
    if (amb_.epsilon == 0.0) {
        return minimize_radius_zero();
    }
    double lo = 0.0;
    double hi = 0.0;
    bracket(lo, hi);
    Result best{std::numeric_limits<double>::infinity(), lo, true};
    const auto note = [&](double tau, const Point& p) {
        if (p.value < best.value || (p.value == best.value && tau < best.tau)) {
            best.value = p.value;
            best.tau = tau;
        }
    };
    const auto stop_hit = [&]() { return stop_below && best.value <= *stop_below; };

    if (hi - lo <= 0.0) {
        note(lo, eval(lo));
        return best;
    }
    Point plo;
    Point phi;
    bool have_lo = false;
    bool have_hi = false;
    if (tau_hint && *tau_hint > lo && *tau_hint < hi) {
        const Point ph = eval(*tau_hint);
        note(*tau_hint, ph);
        if (stop_hit()) {
            best.exact = false;
            return best;
        }
        if (ph.slope > 0.0) {
            hi = *tau_hint;
            phi = ph;
            have_hi = true;
        } else if (ph.slope < 0.0) {
            lo = *tau_hint;
            plo = ph;
            have_lo = true;
        } else {
            return best;
        }
        // Expanding search for the other side of the bracket near the hint.
        double step = 1e-3 * (hi - lo);
        for (int k = 0; k < 60 && !(have_lo && have_hi); ++k) {
            const double tau = have_hi ? hi - step : lo + step;
            if (have_hi ? tau <= lo : tau >= hi) {
                break;
            }
            const Point p = eval(tau);
            note(tau, p);
            if (stop_hit()) {
                best.exact = false;
                return best;
            }
            if (p.slope == 0.0) {
                return best;
            }
            if (have_hi) {
                if (p.slope < 0.0) {
                    lo = tau;
                    plo = p;
                    have_lo = true;
                } else {
                    hi = tau;
                    phi = p;
                }
            } else {
                if (p.slope > 0.0) {
                    hi = tau;
                    phi = p;
                    have_hi = true;
                } else {
                    lo = tau;
                    plo = p;
                }
            }
            step *= 4.0;
        }
    }
    if (!have_lo) {
        plo = eval(lo);
        note(lo, plo);
    }
    if (!have_hi) {
        phi = eval(hi);
        note(hi, phi);
    }
    if (stop_hit()) {
        best.exact = false;
        return best;
    }
    for (int it = 0; it < 200; ++it) {
        if (plo.slope >= 0.0 || phi.slope <= 0.0 || hi - lo <= 1e-15 * std::max(1.0, std::abs(lo))) {
            return best;
        }
        // Intersection of the two supporting lines.
        double tau = (phi.value - plo.value + plo.slope * lo - phi.slope * hi) /
                     (plo.slope - phi.slope);
        const double lower = plo.value + plo.slope * (tau - lo);
        const double tol = 1e-13 * std::max(1.0, std::abs(best.value));
        if (best.value - lower <= tol) {
            return best;
        }
        if (stop_below && lower > *stop_below) {
            best.exact = false;
            return best;
        }
        if (!(tau > lo && tau < hi)) {
            tau = 0.5 * (lo + hi);
        }
        const Point p = eval(tau);
        note(tau, p);
        if (stop_hit()) {
            best.exact = false;
            return best;
        }
        if (p.slope > 0.0) {
            hi = tau;
            phi = p;
        } else if (p.slope < 0.0) {
            lo = tau;
            plo = p;
        } else {
            return best;
        }
    }
    best.exact = false;
    return best;
}

PartValue cvar_part(const AmbiguitySet& amb, const ChanceRows& rows, double tau, double gamma) {
    CvarEvaluator ev(amb, gamma);
    ev.set_rows(rows);
    return {ev.eval(tau, false).value, ev.lambdas(tau)};
}

CvarMin minimize_cvar(const AmbiguitySet& amb, const ChanceRows& rows, double gamma) {
    CvarEvaluator ev(amb, gamma);
    ev.set_rows(rows);
    const auto r = ev.minimize();
    return {r.value, r.tau, ev.lambdas(r.tau)};
}

// ---------------------------------------------------------------------------
// Wasserstein distance on the line

double wasserstein_1d(std::span<const double> pa, std::span<const double> wa,
                      std::span<const double> pb, std::span<const double> wb) {
    if (pa.size() != wa.size() || pb.size() != wb.size()) {
        throw DimensionError("atom and weight counts differ");
    }
    if (pa.empty() || pb.empty()) {
        throw ConfigError("wasserstein_1d needs non-empty distributions");
    }
    const auto check = [](std::span<const double> w) {
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-9 ||
            std::any_of(w.begin(), w.end(), [](double v) { return v < 0.0; })) {
            throw ConfigError("weights must be nonnegative and sum to 1");
        }
    };
    check(wa);
    check(wb);
    // Signed mass events; |F_a - F_b| integrated between consecutive positions.
    std::vector<std::pair<double, double>> ev;
    ev.reserve(pa.size() + pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        ev.emplace_back(pa[i], wa[i]);
    }
    for (std::size_t i = 0; i < pb.size(); ++i) {
        ev.emplace_back(pb[i], -wb[i]);
    }
    std::sort(ev.begin(), ev.end());
    double cdf_gap = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
        cdf_gap += ev[i].second;
        total += std::abs(cdf_gap) * (ev[i + 1].first - ev[i].first);
    }
    return total;
}

std::string to_string(DroStatus s) {
    return s == DroStatus::optimal ? "optimal" : "infeasible";
}

}  // namespace dsolab
