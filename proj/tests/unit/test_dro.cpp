#include "dsolab/dera.hpp"
#include "dsolab/dro.hpp"
#include "dsolab/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace dsolab {
namespace {

NetworkModel one_node(double a, double b, double band) {
    return NetworkModel(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
                        Vector::Constant(1, -band), Vector::Constant(1, band));
}

Incentive inc(double kp, double kq) { return {Vector::Constant(1, kp), Vector::Constant(1, kq)}; }

Vector atom(std::initializer_list<double> five) {
    Vector v = Vector::Zero(6);
    Eigen::Index i = 0;
    for (double x : five) v[i++] = x;
    return v;
}

std::vector<Vector> random_atoms(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    std::vector<Vector> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(atom({u(rng), u(rng), u(rng), u(rng), u(rng)}));
    return out;
}

TEST(Lift, Monomials) {
    const Vector x = lift(inc(2, 3)).x;
    const std::vector<double> want{4, 12, 9, 2, 3, 1};
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(x[i], want[static_cast<std::size_t>(i)]);
}

TEST(Lift, ZeroIncentiveKeepsConstant) {
    const Vector x = lift(inc(0, 0)).x;
    EXPECT_EQ(x.head(5).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(x[5], 1.0);
}

TEST(Lift, CostIsLiftedInnerProduct) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const XiSample xi{{XiNode{u(rng), u(rng), u(rng), u(rng), u(rng)}}};
        const Incentive k = inc(u(rng), u(rng));
        const NodalResponse r = abstract_xi_respond(xi, k);
        const double cost = k.k_p[0] * r.dp[0] + k.k_q[0] * r.dq[0];
        EXPECT_NEAR(lift(k).x.dot(xi.stacked()), cost, 1e-12);
    }
}

TEST(ChanceRows, RowsOnlyTouchLinearBlocksThroughConstant) {
    const ChanceRows rows = chance_rows(one_node(0.3, 0.7, 0.05), inc(0, 0));
    // With zero incentive only the offset coefficients remain.
    EXPECT_EQ(rows.a.leftCols(3).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(rows.a(1, 3), 0.3);
    EXPECT_DOUBLE_EQ(rows.a(1, 4), 0.7);
}

TEST(ChanceRows, VoltageRowMatchesResponsePath) {
    const NetworkModel net = one_node(1.0, 0.0, 10.0);
    const XiSample xi{{XiNode{0.5, 0.25, 0.125, 0.5, 0.25}}};
    const Vector w = voltage_row(net, inc(1, 0), 0);
    EXPECT_DOUBLE_EQ(w.dot(xi.stacked()), 1.0);
    const Vector dv = voltage_change(net, abstract_xi_respond(xi, inc(1, 0)));
    EXPECT_DOUBLE_EQ(dv[0], 1.0);
    const Vector dense = voltage_block(net, 0) * lift(inc(1, 0)).x;
    EXPECT_LT((dense - w).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ChanceRows, FeasibilityEquivalence) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    std::uniform_real_distribution<double> k(-20.0, 20.0);
    const NetworkModel net = one_node(0.004, 0.003, 0.05);
    for (int i = 0; i < 1000; ++i) {
        const XiSample xi{{XiNode{u(rng), u(rng), u(rng), u(rng), u(rng)}}};
        const Incentive kk = inc(k(rng), k(rng));
        const ChanceRows rows = chance_rows(net, kk);
        const double worst = (rows.a * xi.stacked() + rows.b).maxCoeff();
        const bool feasible = voltage_feasible(net, voltage_change(net, abstract_xi_respond(xi, kk)));
        if (std::abs(worst) > 1e-12) EXPECT_EQ(worst <= 0.0, feasible);
    }
}

TEST(AmbiguitySet, SupportWidensByMargin) {
    const AmbiguitySet a = AmbiguitySet::from_samples({atom({0, 1, 1, 1, 1}), atom({1, 1, 3, 1, 1})}, 0.1);
    EXPECT_DOUBLE_EQ(a.support_lo[0], -0.25);
    EXPECT_DOUBLE_EQ(a.support_hi[0], 1.25);
    EXPECT_DOUBLE_EQ(a.support_lo[1], 0.0);  // zero range falls back to +/-1
    EXPECT_DOUBLE_EQ(a.support_hi[1], 2.0);
    EXPECT_EQ(a.support_lo[5], 0.0);
    EXPECT_EQ(a.support_hi[5], 0.0);
}

TEST(AmbiguitySet, RejectsNegativeRadius) {
    EXPECT_THROW(AmbiguitySet::from_samples({atom({0, 1, 1, 1, 1})}, -0.1), ConfigError);
    EXPECT_THROW(AmbiguitySet::from_samples({}, 0.1), ConfigError);
}

TEST(WorstCaseCost, RadiusZeroIsSampleAverage) {
    std::mt19937_64 rng(3);
    const auto atoms = random_atoms(rng, 7);
    const AmbiguitySet a = AmbiguitySet::from_samples(atoms, 0.0);
    const LiftedDecision x = lift(inc(0.7, -1.3));
    double avg = 0.0;
    for (const auto& s : atoms) avg += x.x.dot(s) / 7.0;
    EXPECT_NEAR(worst_case_cost(a, x).value, avg, 1e-12);
}

TEST(WorstCaseCost, WideSupportAddsRadius) {
    AmbiguitySet a;
    a.samples = {Vector::Zero(6)};
    a.epsilon = 0.5;
    a.support_lo = Vector::Constant(6, -10.0);
    a.support_hi = Vector::Constant(6, 10.0);
    a.support_lo[5] = a.support_hi[5] = 0.0;
    LiftedDecision x{Vector::Zero(6)};
    x.x[0] = 1.0;
    const PartValue v = worst_case_cost(a, x);
    EXPECT_NEAR(v.value, 0.5, 1e-12);
    EXPECT_NEAR(v.lambda[0], 1.0, 1e-12);
}

TEST(WorstCaseCost, ZeroDecisionIsZero) {
    std::mt19937_64 rng(4);
    const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 4), 0.3);
    const PartValue v = worst_case_cost(a, LiftedDecision{Vector::Zero(6)});
    EXPECT_EQ(v.value, 0.0);
    EXPECT_EQ(v.lambda.cwiseAbs().maxCoeff(), 0.0);
}

TEST(WorstCaseCost, NondecreasingInRadius) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 5), 0.0);
        const LiftedDecision x = lift(inc(u(rng), u(rng)));
        double prev = -1e300;
        for (double e = 0.0; e <= 2.0; e += 0.05) {
            const double v = worst_case_cost(a.with_epsilon(e), x).value;
            EXPECT_GE(v, prev - 1e-12);
            prev = v;
        }
    }
}

TEST(WorstCaseCost, LargeRadiusHitsSupportCorners) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 20; ++i) {
        const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 4), 1e6, 0.0);
        const LiftedDecision x = lift(inc(u(rng), u(rng)));
        double corners = 0.0;
        for (Eigen::Index j = 0; j < 6; ++j) {
            corners += std::max(x.x[j] * a.support_lo[j], x.x[j] * a.support_hi[j]);
        }
        EXPECT_NEAR(worst_case_cost(a, x).value, corners, 1e-9);
    }
}

TEST(WorstCaseCost, ClosedFormMatchesBreakpointWalk) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 6), std::abs(u(rng)) / 3);
        const LiftedDecision x = lift(inc(u(rng), u(rng)));
        double sum = 0.0;
        for (Eigen::Index j = 0; j < 6; ++j) {
            double mean = 0.0;
            for (const auto& s : a.samples) mean += s[j] / static_cast<double>(a.samples.size());
            sum += cost_coordinate(x.x[j], mean, a.support_lo[j], a.support_hi[j], a.epsilon).value;
        }
        EXPECT_NEAR(worst_case_cost(a, x).value, sum, 1e-10);
    }
}

TEST(CvarPart, NullConstraintIsZero) {
    std::mt19937_64 rng(8);
    const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 3), 0.2);
    ChanceRows rows{Matrix::Zero(2, 6), Vector::Constant(2, -1e3)};
    EXPECT_NEAR(cvar_part(a, rows, 0.0, 0.05).value, 0.0, 1e-12);
}

TEST(CvarPart, RadiusZeroMatchesDirectEvaluation) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const NetworkModel net = one_node(0.004, 0.004, 0.05);
    for (int i = 0; i < 30; ++i) {
        const auto atoms = random_atoms(rng, 5);
        const AmbiguitySet a = AmbiguitySet::from_samples(atoms, 0.0);
        const ChanceRows rows = chance_rows(net, inc(u(rng), u(rng)));
        const double tau = u(rng) * 0.01;
        // Separable form: each coordinate carries a sixth of the offsets and of tau.
        double direct = 0.05 * tau;
        for (Eigen::Index j = 0; j < 6; ++j) {
            double acc = 0.0;
            for (const auto& s : atoms) {
                double m = -1e300;
                for (Eigen::Index k = 0; k < rows.a.rows(); ++k) {
                    m = std::max(m, rows.a(k, j) * s[j] + rows.b[k] / 6.0);
                }
                acc += std::max(0.0, m - tau / 6.0);
            }
            direct += acc / static_cast<double>(atoms.size());
        }
        EXPECT_NEAR(cvar_part(a, rows, tau, 0.05).value, direct, 1e-12);
    }
}

TEST(CvarPart, NondecreasingInRadius) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const NetworkModel net = one_node(0.004, 0.004, 0.05);
    for (int i = 0; i < 20; ++i) {
        const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 5), 0.0);
        const ChanceRows rows = chance_rows(net, inc(u(rng), u(rng)));
        double prev = -1e300;
        for (double e = 0.0; e <= 0.5; e += 0.01) {
            const double v = minimize_cvar(a.with_epsilon(e), rows, 0.05).value;
            EXPECT_GE(v, prev - 1e-12);
            prev = v;
        }
    }
}

TEST(CvarEvaluator, MatchesFreeFunction) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const NetworkModel net = one_node(0.004, 0.004, 0.05);
    for (int i = 0; i < 30; ++i) {
        const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 6), std::abs(u(rng)) / 100);
        const ChanceRows rows = chance_rows(net, inc(u(rng), u(rng)));
        CvarEvaluator ev(a, 0.05);
        ev.set_rows(rows);
        const double tau = u(rng) / 100;
        EXPECT_NEAR(ev.eval(tau).value, cvar_part(a, rows, tau, 0.05).value, 1e-12);
        EXPECT_NEAR(ev.minimize().value, minimize_cvar(a, rows, 0.05).value, 1e-10);
    }
}

TEST(SolveDro, SingleSampleRankOneOptimum) {
    const AmbiguitySet a = AmbiguitySet::from_samples({atom({0.5, 0.25, 0.125, 0.5, 0.25})}, 0.0);
    DroOptions o;
    o.warn_on_box = false;
    const DroSolution s = solve_dro(one_node(0.004, 0.004, 1e3), a, 0.05, o);
    ASSERT_EQ(s.status, DroStatus::optimal);
    EXPECT_NEAR(s.expected_cost, -0.125, 1e-9);
    EXPECT_NEAR(s.k.k_p[0] + 0.5 * s.k.k_q[0], -0.5, 1e-4);
    EXPECT_EQ(s.mu, 0.0);
}

TEST(SolveDro, PositiveDefiniteWithoutOffsetsStaysAtOrigin) {
    const AmbiguitySet a = AmbiguitySet::from_samples({atom({1.0, 0.2, 1.0, 0, 0}), atom({2.0, -0.1, 1.5, 0, 0})}, 0.0);
    const DroSolution s = solve_dro(one_node(0.004, 0.004, 0.05), a, 0.05);
    ASSERT_EQ(s.status, DroStatus::optimal);
    EXPECT_NEAR(s.expected_cost, 0.0, 1e-12);
    EXPECT_NEAR(s.k.k_p[0], 0.0, 1e-5);
    EXPECT_NEAR(s.k.k_q[0], 0.0, 1e-5);
}

TEST(SolveDro, ExpectedCostIsWorstCaseAtOptimum) {
    std::mt19937_64 rng(12);
    const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 10), 0.01);
    const DroSolution s = solve_dro(one_node(0.004, 0.004, 0.05), a, 0.05);
    ASSERT_EQ(s.status, DroStatus::optimal);
    EXPECT_NEAR(s.expected_cost, worst_case_cost(a, lift(s.k)).value, 1e-12);
    EXPECT_LE(s.cvar_value, 1e-9);
    EXPECT_EQ(s.cvar_exp, 0.0);
    EXPECT_GE(s.mu, 0.0);
    EXPECT_TRUE((s.lambda_co.array() >= 0).all());
    EXPECT_TRUE((s.lambda_cc.array() >= 0).all());
}

TEST(SolveDro, InfeasibleWhenOffsetsAloneBreakTheBand) {
    // The constant response alone pushes the voltage past the band.
    const AmbiguitySet a = AmbiguitySet::from_samples({atom({0.1, 0, 0.1, 50, 50}), atom({0.2, 0, 0.2, 60, 40})}, 0.0);
    const DroSolution s = solve_dro(one_node(0.004, 0.004, 0.05), a, 0.05);
    EXPECT_EQ(s.status, DroStatus::infeasible);
}

TEST(SolveDro, DeterministicForFixedInputs) {
    std::mt19937_64 rng(13);
    const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 10), 0.02);
    const DroSolution s1 = solve_dro(one_node(0.004, 0.004, 0.05), a, 0.05);
    const DroSolution s2 = solve_dro(one_node(0.004, 0.004, 0.05), a, 0.05);
    EXPECT_EQ(s1.expected_cost, s2.expected_cost);
    EXPECT_EQ(s1.k.k_p[0], s2.k.k_p[0]);
}

TEST(ExtractMu, InactiveConstraintGivesZero) {
    std::mt19937_64 rng(14);
    const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 10), 0.01);
    const DroSolution s = solve_dro(one_node(0.004, 0.004, 1e3), a, 0.05);
    ASSERT_EQ(s.status, DroStatus::optimal);
    EXPECT_EQ(extract_mu(one_node(0.004, 0.004, 1e3), a, 0.05, s, DroOptions{}), 0.0);
}

TEST(ExtractMu, ActiveConstraintMatchesShadowPrice) {
    std::mt19937_64 rng(15);
    const NetworkModel net = one_node(0.004, 0.004, 0.05);
    int active = 0;
    for (int i = 0; i < 20 && active < 3; ++i) {
        const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 8), 0.01);
        DroOptions o;
        o.warn_on_box = false;
        const DroSolution s0 = solve_dro(net, a, 0.05, o);
        if (s0.status != DroStatus::optimal) continue;
        o.warm_start = s0.k;
        o.local_only = true;
        o.step0 = 1e-2;
        o.step_min = 1e-12;
        const DroSolution s = solve_dro(net, a, 0.05, o);
        if (s.mu <= 0.0) continue;
        ++active;
        o.compute_mu = false;
        o.warm_start = s.k;
        constexpr double delta = 1e-5;
        o.cvar_rhs = delta;
        const double up = solve_dro(net, a, 0.05, o).expected_cost;
        o.cvar_rhs = -delta;
        const double dn = solve_dro(net, a, 0.05, o).expected_cost;
        EXPECT_NEAR(s.mu, (dn - up) / (2 * delta), 1e-2 * s.mu);
    }
    EXPECT_GT(active, 0);
}

TEST(ExtractMu, RejectsInfeasibleSolution) {
    std::mt19937_64 rng(16);
    const AmbiguitySet a = AmbiguitySet::from_samples(random_atoms(rng, 3), 0.0);
    DroSolution bad;
    bad.status = DroStatus::infeasible;
    EXPECT_THROW(extract_mu(one_node(0.004, 0.004, 0.05), a, 0.05, bad, DroOptions{}), SensitivityError);
}

TEST(Wasserstein1d, IdenticalIsZero) {
    const std::vector<double> p{0.0, 1.0, 5.0};
    const std::vector<double> w{0.2, 0.3, 0.5};
    EXPECT_NEAR(wasserstein_1d(p, w, p, w), 0.0, 1e-15);
}

TEST(Wasserstein1d, DiracDistance) {
    const std::vector<double> a{1.5};
    const std::vector<double> b{-2.0};
    const std::vector<double> w{1.0};
    EXPECT_DOUBLE_EQ(wasserstein_1d(a, w, b, w), 3.5);
}

TEST(Wasserstein1d, TwoByTwo) {
    const std::vector<double> a{0.0, 1.0};
    const std::vector<double> b{0.0, 3.0};
    const std::vector<double> w{0.5, 0.5};
    EXPECT_DOUBLE_EQ(wasserstein_1d(a, w, b, w), 1.0);
}

TEST(Wasserstein1d, RejectsBadWeights) {
    const std::vector<double> a{0.0, 1.0};
    const std::vector<double> w{0.5, 0.6};
    const std::vector<double> ok{0.5, 0.5};
    EXPECT_THROW(wasserstein_1d(a, w, a, ok), ConfigError);
}

}  // namespace
}  // namespace dsolab
