#include "dsolab/dera.hpp"

#include "dsolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dsolab {

void DerUnit::validate() const {
    if (!std::isfinite(s) || !std::isfinite(dp_min) || !std::isfinite(dp_max) ||
        !std::isfinite(phi_min) || !std::isfinite(phi_max)) {
        throw ConfigError("DER unit fields must be finite");
    }
    if (dp_min > dp_max) {
        throw ConfigError("DER unit: dp_min > dp_max");
    }
    if (phi_min > phi_max) {
        throw ConfigError("DER unit: phi_min > phi_max");
    }
}

void DeraGroundTruth::validate() const {
    if (units.empty()) {
        throw ConfigError("aggregator at node " + std::to_string(node) + " has no units");
    }
    for (const auto& u : units) {
        u.validate();
    }
}

FieldPerturbation::Field parse_field(const std::string& name) {
    using F = FieldPerturbation::Field;
    if (name == "s") return F::s;
    if (name == "dp_min") return F::dp_min;
    if (name == "dp_max") return F::dp_max;
    if (name == "phi_min") return F::phi_min;
    if (name == "phi_max") return F::phi_max;
    throw ConfigError("unknown perturbation field '" + name + "'");
}

FieldPerturbation::Family parse_family(const std::string& name) {
    if (name == "uniform") return FieldPerturbation::Family::uniform;
    if (name == "normal") return FieldPerturbation::Family::normal;
    throw ConfigError("unknown perturbation family '" + name + "'");
}

double der_objective(const DerUnit& unit, double k_p, double k_q, UnitResponse r) {
    return unit.s * r.dp - k_p * r.dp - k_q * r.dq;
}

std::vector<UnitResponse> der_vertices(const DerUnit& unit) {
    std::vector<UnitResponse> v;
    v.reserve(5);
    for (double dp : {unit.dp_min, unit.dp_max}) {
        v.push_back({dp, unit.phi_min * dp});
        v.push_back({dp, unit.phi_max * dp});
    }
    if (unit.dp_min <= 0.0 && unit.dp_max >= 0.0) {
        v.push_back({0.0, 0.0});
    }
    return v;
}

UnitResponse der_best_response(const DerUnit& unit, double k_p, double k_q) {
    const auto vertices = der_vertices(unit);
    // Relative tolerance so that exact economic ties survive rounding.
    double scale = 0.0;
    for (const auto& v : vertices) {
        scale = std::max(scale, (std::abs(unit.s) + std::abs(k_p)) * std::abs(v.dp) +
                                    std::abs(k_q) * std::abs(v.dq));
    }
    const double tie_tol = 1e-12 * std::max(1.0, scale);

    UnitResponse best = vertices.front();
    double best_obj = der_objective(unit, k_p, k_q, best);
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        const UnitResponse cand = vertices[i];
        const double obj = der_objective(unit, k_p, k_q, cand);
        if (obj < best_obj - tie_tol) {
            best = cand;
            best_obj = obj;
        } else if (obj <= best_obj + tie_tol) {
            const bool smaller_dp = std::abs(cand.dp) < std::abs(best.dp);
            const bool same_dp = std::abs(cand.dp) == std::abs(best.dp);
            if (smaller_dp || (same_dp && std::abs(cand.dq) < std::abs(best.dq))) {
                best = cand;
                best_obj = std::min(best_obj, obj);
            }
        }
    }
    return best;
}

UnitResponse dera_respond(const DeraGroundTruth& dera, double k_p, double k_q) {
    UnitResponse total;
    for (const auto& unit : dera.units) {
        const auto r = der_best_response(unit, k_p, k_q);
        total.dp += r.dp;
        total.dq += r.dq;
    }
    return total;
}

namespace {

double& field_ref(DerUnit& u, FieldPerturbation::Field f) {
    using F = FieldPerturbation::Field;
    switch (f) {
        case F::s: return u.s;
        case F::dp_min: return u.dp_min;
        case F::dp_max: return u.dp_max;
        case F::phi_min: return u.phi_min;
        case F::phi_max: return u.phi_max;
    }
    return u.s;
}

void repair(double& lo, double& hi) {
    if (lo > hi) {
        const double mid = 0.5 * (lo + hi);
        lo = mid;
        hi = mid;
    }
}

}  // namespace

DeraGroundTruth sample_params(const ParamProcess& proc, std::uint64_t t) {
    DeraGroundTruth out = proc.base;
    if (proc.perturbations.empty()) {
        return out;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(proc.seed), static_cast<std::uint32_t>(proc.seed >> 32),
                      static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit_uniform(-1.0, 1.0);
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    for (auto& unit : out.units) {
        for (const auto& p : proc.perturbations) {
            const double z = p.family == FieldPerturbation::Family::uniform ? unit_uniform(rng)
                                                                            : unit_normal(rng);
            double& v = field_ref(unit, p.field);
            v *= 1.0 + p.scale * z;
        }
        repair(unit.dp_min, unit.dp_max);
        repair(unit.phi_min, unit.phi_max);
    }
    return out;
}

NodalResponse abstract_xi_respond(const XiSample& xi, const Incentive& k) {
    const std::size_t n = xi.n_nodes();
    require_size(k.k_p, n, "k_p");
    require_size(k.k_q, n, "k_q");
    NodalResponse r = NodalResponse::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = xi.nodes[i];
        const auto e = static_cast<Eigen::Index>(i);
        r.dp[e] = c[0] * k.k_p[e] + c[1] * k.k_q[e] + c[3];
        r.dq[e] = c[1] * k.k_p[e] + c[2] * k.k_q[e] + c[4];
    }
    return r;
}

}  // namespace dsolab
