#pragma once

#include "dsolab/netmodel.hpp"
#include "dsolab/xi.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dsolab {

/// Incentives offered at step t and the aggregate responses observed.
struct Observation {
    std::uint64_t t = 0;
    Incentive k;
    NodalResponse resp;
};

/// Node-level quadratic stand-in for the aggregator:
///   min c*dp^2 + d*dp - k_p*dp - k_q*dq  s.t. dq = phi*dp.
struct SurrogateParams {
    Vector c;
    Vector d;
    Vector phi;
};

struct CdEstimate {
    double c = 0.0;
    double d = 0.0;
};

/// Tolerances of the inversion; defaults are the documented ones.
struct InversionTolerances {
    double div_eps = 1e-8;   ///< |dP| at or below this is degenerate
    double sing_eps = 1e-8;  ///< relative separation required between paired dP
    double c_eps = 1e-8;     ///< |c| at or below this is rejected
};

/// phi = dQ / dP at node n. Throws DegenerateObservation when |dP| <= div_eps.
double estimate_phi(const Observation& obs, std::size_t n, const InversionTolerances& tol = {});

/// Solves 2c*dP_s + d = k_p_s + k_q_s*phi_s for s in {t, t'} assuming (c, d)
/// constant across the pair. Throws SingularPair or DegenerateCoefficient.
CdEstimate estimate_cd(const Observation& obs_t, const Observation& obs_t2, std::size_t n,
                       const InversionTolerances& tol = {});

/// Coefficients of one node from (c, d, phi). Throws DegenerateCoefficient if c == 0.
XiNode build_xi(double c, double d, double phi);
XiNode build_xi(const SurrogateParams& params, std::size_t n);

/// The DSO's affine model of the follower:
///   dp = x0*k_p + x1*k_q + x3,  dq = x1*k_p + x2*k_q + x4.
std::pair<double, double> kkt_response_map(const XiNode& xi, double k_p, double k_q);

/// Exact optimum of the surrogate problem at node level (used as a forward model).
std::pair<double, double> surrogate_optimum(double c, double d, double phi, double k_p, double k_q);

enum class SampleSource { learned, seeded };

struct StoredSample {
    std::uint64_t run_id = 0;
    std::uint64_t outer_step = 0;
    SampleSource source = SampleSource::learned;
    XiSample xi;
};

struct SkipEvent {
    std::uint64_t t_first = 0;
    std::uint64_t t_second = 0;
    std::size_t node = 0;
    std::string reason;
};

struct IngestResult {
    std::vector<XiSample> new_samples;
    std::vector<SkipEvent> skipped;
};

/// Learned coefficient samples. Single writer; DRO solves read a snapshot.
class SampleStore {
public:
    explicit SampleStore(std::size_t n_nodes, InversionTolerances tol = {});

    std::size_t n_nodes() const { return n_nodes_; }
    std::size_t size() const { return samples_.size(); }
    const std::vector<StoredSample>& samples() const { return samples_; }

    void add(XiSample xi, SampleSource source, std::uint64_t run_id = 0,
             std::uint64_t outer_step = 0);

    /// Pairs consecutive observations (t, t+1), inverts each node and appends
    /// one sample per fully recovered pair. Per-pair failures become skip events.
    IngestResult ingest(std::span<const Observation> stream, std::uint64_t run_id = 0,
                        std::uint64_t outer_step = 0);

    /// Stacked (length 6N) copies of every sample, in insertion order.
    std::vector<Vector> snapshot() const;

    /// CSV with columns run_id,T,n,xi1..xi5,source; one row per sample and node.
    void write_csv(std::ostream& os, bool header = true) const;
    static SampleStore read_csv(std::istream& is, std::size_t n_nodes);

private:
    std::size_t n_nodes_;
    InversionTolerances tol_;
    std::vector<StoredSample> samples_;
};

}  // namespace dsolab
