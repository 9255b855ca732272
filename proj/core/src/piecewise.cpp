#include "dsolab/piecewise.hpp"

#include <algorithm>
#include <cmath>

namespace dsolab {

namespace {

struct Line {
    double v;  // value at lambda = 0
    double s;  // slope
};

// Appends the breakpoints of max(p, u - l du, l - l dl) on lambda >= 0 and
// returns the slope just right of 0.
double term_events(const DualTerm& t, std::vector<DualWorkspace::Event>& out) {
    const Line lines[3] = {{t.p, 0.0}, {t.u, -t.du}, {t.l, -t.dl}};
    int cur = 0;
    for (int m = 1; m < 3; ++m) {
        const Line& a = lines[m];
        const Line& c = lines[cur];
        if (a.v > c.v || (a.v == c.v && a.s > c.s)) {
            cur = m;
        }
    }
    const double slope0 = lines[cur].s;
    double at = 0.0;
    // At most two upward slope changes before the flat line takes over.
    for (int guard = 0; guard < 2; ++guard) {
        const Line& c = lines[cur];
        int next = -1;
        double best = 0.0;
        for (int m = 0; m < 3; ++m) {
            const Line& a = lines[m];
            if (a.s <= c.s) {
                continue;
            }
            const double x = std::max(at, (c.v - a.v) / (a.s - c.s));
            if (next < 0 || x < best || (x == best && a.s > lines[next].s)) {
                next = m;
                best = x;
            }
        }
        if (next < 0) {
            break;
        }
        out.push_back({best, lines[next].s - c.s});
        at = best;
        cur = next;
    }
    return slope0;
}

}  // namespace

DualMin minimize_dual(std::span<const DualTerm> terms, double eps, DualWorkspace& ws,
                      bool want_mass) {
    const std::size_t n = terms.size();
    DualMin out;
    if (n == 0) {
        return out;
    }
    ws.events.clear();
    double slope_sum = 0.0;
    for (const auto& t : terms) {
        slope_sum += term_events(t, ws.events);
    }
    const double budget = static_cast<double>(n) * eps;
    if (slope_sum + budget < 0.0) {
        // Drop breakpoints from the right while the slope beyond them stays >= 0.
        auto& ev = ws.events;
        const auto by_at = [](const DualWorkspace::Event& a, const DualWorkspace::Event& b) {
            return a.at < b.at;
        };
        std::make_heap(ev.begin(), ev.end(), by_at);
        double right_rise = 0.0;
        auto end = ev.end();
        while (end != ev.begin()) {
            const auto top = ev.front();
            if (right_rise + top.rise > budget) {
                out.lambda = top.at;
                break;
            }
            right_rise += top.rise;
            std::pop_heap(ev.begin(), end, by_at);
            --end;
        }
    }
    double acc = 0.0;
    for (const auto& t : terms) {
        acc += dual_term_value(t, out.lambda);
    }
    out.value = out.lambda * eps + acc / static_cast<double>(n);

    if (want_mass) {
        ws.mass.assign(n, {0.0, 0.0, 0.0});
        // Flattest active line on each term, then steepest; mix to spend eps exactly.
        double use_flat = 0.0;
        double use_steep = 0.0;
        auto& pick = ws.pick;
        pick.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& t = terms[i];
            const double v[3] = {t.p, t.u - out.lambda * t.du, t.l - out.lambda * t.dl};
            const double s[3] = {0.0, -t.du, -t.dl};
            const double f = std::max({v[0], v[1], v[2]});
            const double tol = 1e-12 * std::max(1.0, std::abs(f));
            int flat = -1;
            int steep = -1;
            for (int m = 0; m < 3; ++m) {
                if (v[m] < f - tol) {
                    continue;
                }
                if (flat < 0 || s[m] > s[flat]) {
                    flat = m;
                }
                if (steep < 0 || s[m] < s[steep]) {
                    steep = m;
                }
            }
            pick[i] = {flat, steep};
            use_flat -= s[flat];
            use_steep -= s[steep];
        }
        double theta = 0.0;
        if (out.lambda > 0.0 && use_steep > use_flat) {
            theta = std::clamp((budget - use_flat) / (use_steep - use_flat), 0.0, 1.0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            ws.mass[i][pick[i][0]] += 1.0 - theta;
            ws.mass[i][pick[i][1]] += theta;
        }
    }
    return out;
}

}  // namespace dsolab
