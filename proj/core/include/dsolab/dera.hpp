#pragma once

#include "dsolab/netmodel.hpp"
#include "dsolab/xi.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dsolab {

/// One distributed energy resource behind an aggregator.
///
/// The reactive response is tied to the active one through the ratio band
/// dq / dp in [phi_min, phi_max]; for dp < 0 the dq interval flips.
struct DerUnit {
    double s = 0.0;  ///< cost per unit of active response
    double dp_min = 0.0;
    double dp_max = 0.0;
    double phi_min = 0.0;
    double phi_max = 0.0;

    void validate() const;
};

/// Hidden parameters of the aggregator sitting at `node`.
struct DeraGroundTruth {
    std::size_t node = 0;
    std::vector<DerUnit> units;

    void validate() const;
};

struct FieldPerturbation {
    enum class Field { s, dp_min, dp_max, phi_min, phi_max };
    enum class Family { uniform, normal };

    Field field = Field::s;
    Family family = Family::uniform;
    /// Relative scale: uniform draws base*(1 + U(-scale, scale)), normal
    /// draws base*(1 + scale*N(0,1)).
    double scale = 0.0;
};

FieldPerturbation::Field parse_field(const std::string& name);
FieldPerturbation::Family parse_family(const std::string& name);

/// Time variation of the hidden aggregator parameters.
struct ParamProcess {
    DeraGroundTruth base;
    std::vector<FieldPerturbation> perturbations;
    std::uint64_t seed = 0;
};

struct UnitResponse {
    double dp = 0.0;
    double dq = 0.0;
};

/// Profit-maximizing re-dispatch of a single unit: minimizes
/// s*dp - k_p*dp - k_q*dq over the unit's operating region by enumerating
/// its vertices. Ties go to the smallest |dp|, then the smallest |dq|.
UnitResponse der_best_response(const DerUnit& unit, double k_p, double k_q);

/// Objective value the unit minimizes, exposed for tests and diagnostics.
double der_objective(const DerUnit& unit, double k_p, double k_q, UnitResponse r);

/// Candidate vertices of the operating region (corners plus the origin
/// when the active range straddles zero).
std::vector<UnitResponse> der_vertices(const DerUnit& unit);

/// Node aggregate: the per-unit problems are separable, so summing the
/// per-unit optima solves the aggregator problem.
UnitResponse dera_respond(const DeraGroundTruth& dera, double k_p, double k_q);

/// Deterministic in (proc.seed, t); sampled units always satisfy the
/// DerUnit invariants (crossed bounds collapse to their midpoint).
DeraGroundTruth sample_params(const ParamProcess& proc, std::uint64_t t);

/// Affine response of the abstract follower used when the coefficient vector
/// is drawn directly.
NodalResponse abstract_xi_respond(const XiSample& xi, const Incentive& k);

}  // namespace dsolab
