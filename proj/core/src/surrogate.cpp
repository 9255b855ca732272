#include "dsolab/surrogate.hpp"

#include "dsolab/csv.hpp"
#include "dsolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace dsolab {

namespace {

void check_node(const Observation& obs, std::size_t n) {
    if (n >= obs.resp.size() || n >= obs.k.size()) {
        throw DimensionError("observation has no node " + std::to_string(n));
    }
}

}  // namespace

double estimate_phi(const Observation& obs, std::size_t n, const InversionTolerances& tol) {
    check_node(obs, n);
    const auto e = static_cast<Eigen::Index>(n);
    const double dp = obs.resp.dp[e];
    if (!(std::abs(dp) > tol.div_eps)) {
        throw DegenerateObservation("|dP| too small at node " + std::to_string(n) + ", t=" +
                                    std::to_string(obs.t));
    }
    return obs.resp.dq[e] / dp;
}

CdEstimate estimate_cd(const Observation& obs_t, const Observation& obs_t2, std::size_t n,
                       const InversionTolerances& tol) {
    const double phi1 = estimate_phi(obs_t, n, tol);
    const double phi2 = estimate_phi(obs_t2, n, tol);
    const auto e = static_cast<Eigen::Index>(n);
    const double p1 = obs_t.resp.dp[e];
    const double p2 = obs_t2.resp.dp[e];
    const double scale = std::max({1.0, std::abs(p1), std::abs(p2)});
    if (!(std::abs(p1 - p2) > tol.sing_eps * scale)) {
        throw SingularPair("paired observations have indistinguishable dP at node " +
                           std::to_string(n));
    }
    const double rhs1 = obs_t.k.k_p[e] + obs_t.k.k_q[e] * phi1;
    const double rhs2 = obs_t2.k.k_p[e] + obs_t2.k.k_q[e] * phi2;
    const double c = (rhs1 - rhs2) / (2.0 * (p1 - p2));
    if (!(std::abs(c) > tol.c_eps)) {
        throw DegenerateCoefficient("recovered c is zero at node " + std::to_string(n));
    }
    const double d = rhs1 - 2.0 * c * p1;
    return {c, d};
}

XiNode build_xi(double c, double d, double phi) {
    if (c == 0.0) {
        throw DegenerateCoefficient("build_xi: c must be nonzero");
    }
    const double h = 1.0 / (2.0 * c);
    return {h, phi * h, phi * phi * h, -d * h, -phi * d * h};
}

XiNode build_xi(const SurrogateParams& params, std::size_t n) {
    const auto e = static_cast<Eigen::Index>(n);
    if (e >= params.c.size() || e >= params.d.size() || e >= params.phi.size()) {
        throw DimensionError("surrogate parameters have no node " + std::to_string(n));
    }
    return build_xi(params.c[e], params.d[e], params.phi[e]);
}

std::pair<double, double> kkt_response_map(const XiNode& xi, double k_p, double k_q) {
    return {xi[0] * k_p + xi[1] * k_q + xi[3], xi[1] * k_p + xi[2] * k_q + xi[4]};
}

std::pair<double, double> surrogate_optimum(double c, double d, double phi, double k_p,
                                            double k_q) {
    // Substituting dq = phi*dp leaves c*dp^2 + (d - k_p - phi*k_q)*dp.
    const double dp = (k_p + phi * k_q - d) / (2.0 * c);
    return {dp, phi * dp};
}

SampleStore::SampleStore(std::size_t n_nodes, InversionTolerances tol)
    : n_nodes_(n_nodes), tol_(tol) {
    if (n_nodes_ == 0) {
        throw ConfigError("sample store needs at least one node");
    }
}

void SampleStore::add(XiSample xi, SampleSource source, std::uint64_t run_id,
                      std::uint64_t outer_step) {
    if (xi.n_nodes() != n_nodes_) {
        throw DimensionError("sample has " + std::to_string(xi.n_nodes()) + " nodes, store has " +
                             std::to_string(n_nodes_));
    }
    if (!xi.all_finite()) {
        throw ConfigError("refusing to store a non-finite sample");
    }
    samples_.push_back({run_id, outer_step, source, std::move(xi)});
}

IngestResult SampleStore::ingest(std::span<const Observation> stream, std::uint64_t run_id,
                                 std::uint64_t outer_step) {
    IngestResult result;
    for (std::size_t i = 0; i + 1 < stream.size(); ++i) {
        const Observation& a = stream[i];
        const Observation& b = stream[i + 1];
        XiSample xi;
        xi.nodes.resize(n_nodes_);
        bool ok = true;
        for (std::size_t n = 0; n < n_nodes_ && ok; ++n) {
            try {
                const CdEstimate cd = estimate_cd(a, b, n, tol_);
                const double phi = estimate_phi(b, n, tol_);
                xi.nodes[n] = build_xi(cd.c, cd.d, phi);
                if (!std::all_of(xi.nodes[n].begin(), xi.nodes[n].end(),
                                 [](double v) { return std::isfinite(v); })) {
                    throw DegenerateCoefficient("non-finite coefficients");
                }
            } catch (const Error& err) {
                result.skipped.push_back({a.t, b.t, n, err.what()});
                ok = false;
            }
        }
        if (ok) {
            result.new_samples.push_back(xi);
            add(std::move(xi), SampleSource::learned, run_id, outer_step);
        }
    }
    return result;
}

std::vector<Vector> SampleStore::snapshot() const {
    std::vector<Vector> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) {
        out.push_back(s.xi.stacked());
    }
    return out;
}

void SampleStore::write_csv(std::ostream& os, bool header) const {
    if (header) {
        os << "run_id,T,n,xi1,xi2,xi3,xi4,xi5,source\n";
    }
    for (const auto& s : samples_) {
        for (std::size_t n = 0; n < s.xi.n_nodes(); ++n) {
            os << s.run_id << ',' << s.outer_step << ',' << n;
            for (double v : s.xi.nodes[n]) {
                os << ',' << csv::num(v);
            }
            os << ',' << (s.source == SampleSource::learned ? "learned" : "seeded") << '\n';
        }
    }
}

SampleStore SampleStore::read_csv(std::istream& is, std::size_t n_nodes) {
    SampleStore store(n_nodes);
    std::string line;
    if (!std::getline(is, line)) {
        return store;
    }
    const auto header = csv::split_line(line);
    const std::vector<std::string> expected{"run_id", "T", "n", "xi1", "xi2",
                                            "xi3", "xi4", "xi5", "source"};
    if (header != expected) {
        throw ConfigError("sample CSV header mismatch");
    }
    // Rows of one sample are contiguous and ordered by node.
    XiSample pending;
    std::uint64_t run_id = 0;
    std::uint64_t step = 0;
    SampleSource source = SampleSource::learned;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = csv::split_line(line);
        if (f.size() != expected.size()) {
            throw ConfigError("sample CSV row has " + std::to_string(f.size()) + " fields");
        }
        const auto node = static_cast<std::size_t>(std::stoull(f[2]));
        if (node != pending.nodes.size()) {
            throw ConfigError("sample CSV rows out of node order");
        }
        run_id = std::stoull(f[0]);
        step = std::stoull(f[1]);
        if (f[8] == "learned") {
            source = SampleSource::learned;
        } else if (f[8] == "seeded") {
            source = SampleSource::seeded;
        } else {
            throw ConfigError("unknown sample source '" + f[8] + "'");
        }
        XiNode xi{};
        for (std::size_t c = 0; c < 5; ++c) {
            xi[c] = csv::parse_double(f[3 + c]);
        }
        pending.nodes.push_back(xi);
        if (pending.nodes.size() == n_nodes) {
            store.add(std::move(pending), source, run_id, step);
            pending = XiSample{};
        }
    }
    if (!pending.nodes.empty()) {
        throw ConfigError("sample CSV ends with an incomplete sample");
    }
    return store;
}

}  // namespace dsolab
