#include "dsolab/adapt.hpp"
#include "dsolab/dera.hpp"
#include "dsolab/dro.hpp"
#include "dsolab/errors.hpp"
#include "dsolab/oracle/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace dsolab {
namespace {

Incentive inc(double kp, double kq) { return {Vector::Constant(1, kp), Vector::Constant(1, kq)}; }

NetworkModel one_node(double band) {
    return NetworkModel(Matrix::Constant(1, 1, 0.004), Matrix::Constant(1, 1, 0.004),
                        Vector::Constant(1, -band), Vector::Constant(1, band));
}

StepRecord step(double cost_exp, double cost_act, double lambda_sum = 1.0) {
    StepRecord s;
    s.k = inc(0, 0);
    s.resp = NodalResponse::zeros(1);
    s.cost_exp = cost_exp;
    s.cost_act = cost_act;
    s.lambda_co = Vector::Zero(6);
    s.lambda_co[0] = lambda_sum;
    s.lambda_cc = Vector::Zero(6);
    s.xi.nodes = {XiNode{0, 0, 0, 0, 0}};
    s.rows = chance_rows(one_node(0.05), s.k);
    return s;
}

InnerLoopLog log_of(std::vector<StepRecord> steps) { return InnerLoopLog{std::move(steps)}; }

TEST(ActualCost, ZeroResponse) { EXPECT_EQ(actual_cost(step(0, 0)), 0.0); }

TEST(ActualCost, Arithmetic) {
    StepRecord s = step(0, 0);
    s.k = inc(2, 1);
    s.resp = {Vector::Constant(1, 0.25), Vector::Constant(1, 0.125)};
    EXPECT_DOUBLE_EQ(actual_cost(s), 0.625);
}

TEST(ActualCost, EqualsLiftedInnerProduct) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        StepRecord s = step(0, 0);
        s.xi.nodes = {XiNode{u(rng), u(rng), u(rng), u(rng), u(rng)}};
        s.k = inc(u(rng), u(rng));
        s.resp = abstract_xi_respond(s.xi, s.k);
        EXPECT_NEAR(actual_cost(s), lift(s.k).x.dot(s.xi.stacked()), 1e-12);
    }
}

TEST(ActualCvar, FeasibleStepsGiveZero) {
    const InnerLoopLog log = log_of({step(0, 0), step(0, 0), step(0, 0)});
    EXPECT_EQ(actual_cvar(log, 0.05), 0.0);
}

TEST(ActualCvar, SingleViolationScalesByGamma) {
    StepRecord s = step(0, 0);
    s.xi.nodes = {XiNode{0, 0, 0, 20, 0}};  // dV = 0.08 against a 0.05 band
    const double l = step_violation(s);
    EXPECT_NEAR(l, 0.03, 1e-15);
    EXPECT_NEAR(actual_cvar(log_of({s}), 0.2), 0.2 * l, 1e-15);
}

TEST(CvarOfLosses, GammaOneIsMean) {
    const std::vector<double> l{0.0, 0.3, 0.1, 0.7};
    EXPECT_DOUBLE_EQ(cvar_of_losses(l, 1.0), 0.275);
}

TEST(CvarOfLosses, EmptyIsZeroAndGammaChecked) {
    EXPECT_EQ(cvar_of_losses({}, 0.1), 0.0);
    const std::vector<double> l{0.1};
    EXPECT_THROW(cvar_of_losses(l, 0.0), ConfigError);
    EXPECT_THROW(cvar_of_losses(l, 1.5), ConfigError);
}

TEST(CvarOfLosses, MatchesTauGrid) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> l;
        for (int j = 0; j < 1 + i % 7; ++j) l.push_back(std::max(0.0, u(rng)));
        const double gamma = 0.01 + 0.98 * (u(rng) + 1) / 2;
        EXPECT_NEAR(cvar_of_losses(l, gamma), oracle::cvar_tau_grid(l, gamma, 1e-4), 1e-4);
    }
}

TEST(SelectWorstTime, SmallestGap) {
    EXPECT_EQ(select_worst_time(log_of({step(0.5, 0), step(0.1, 0), step(0.3, 0)})), 1u);
}

TEST(SelectWorstTime, TiesGoToEarliest) {
    EXPECT_EQ(select_worst_time(log_of({step(0.2, 0), step(-0.2, 0), step(0.2, 0)})), 0u);
}

TEST(SelectWorstTime, EmptyLogThrows) { EXPECT_THROW(select_worst_time(InnerLoopLog{}), ConfigError); }

TEST(SelectWorstTime, MatchesScan) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<StepRecord> s;
        for (int t = 0; t < 5; ++t) s.push_back(step(u(rng), u(rng)));
        std::size_t best = 0;
        for (std::size_t t = 1; t < 5; ++t) {
            if (std::abs(s[t].cost_exp - s[t].cost_act) < std::abs(s[best].cost_exp - s[best].cost_act)) best = t;
        }
        EXPECT_EQ(select_worst_time(log_of(s)), best);
    }
}

TEST(Loss, ZeroWhenExpectedMatches) { EXPECT_EQ(loss(log_of({step(1, 1), step(2, 2)}), 0.05), 0.0); }

TEST(Loss, CostGapSquared) { EXPECT_DOUBLE_EQ(loss(log_of({step(3, 1), step(5, 2)}), 0.05), 4.0); }

TEST(Gradient, ZeroGaps) { EXPECT_EQ(gradient(log_of({step(1, 1)}), 0.05), 0.0); }

TEST(Gradient, CostTermArithmetic) { EXPECT_DOUBLE_EQ(gradient(log_of({step(2, 1, 2.0)}), 0.05), 4.0); }

TEST(Gradient, CvarTermUsesMeanPartial) {
    StepRecord a = step(1, 1);
    a.mu = 2.0;
    a.lambda_cc[1] = 0.5;
    a.cvar_value = 0.0;
    StepRecord b = a;
    b.xi.nodes = {XiNode{0, 0, 0, 20, 0}};
    const InnerLoopLog log = log_of({a, b});
    const LossTerms t = loss_terms(log, 0.5);
    EXPECT_DOUBLE_EQ(t.dcvar, 1.0);
    EXPECT_NEAR(t.grad_cvar_term, 2.0 * (0.0 - t.cvar_act) * 1.0, 1e-15);
    EXPECT_GT(t.cvar_act, 0.0);
}

// Expected cost above actual with no CVaR excess never increases the radius.
TEST(Gradient, DirectionProperty) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<StepRecord> s;
        for (int t = 0; t < 5; ++t) {
            const double act = u(rng);
            s.push_back(step(act + u(rng), act, u(rng)));
        }
        EXPECT_GE(gradient(log_of(s), 0.05), 0.0);
    }
}

TEST(UpdateEpsilon, Rules) {
    EpsilonState st{0.01, 0.001, {}};
    EXPECT_EQ(update_epsilon(st, 0.0).epsilon, 0.01);
    EXPECT_DOUBLE_EQ(update_epsilon(st, 4.0).epsilon, 0.006);
    st.epsilon = 0.001;
    const EpsilonState c = update_epsilon(st, 4.0, 7, 1.5);
    EXPECT_EQ(c.epsilon, 0.0);
    ASSERT_EQ(c.history.size(), 1u);
    EXPECT_EQ(c.history[0].T, 7u);
    EXPECT_EQ(c.history[0].loss, 1.5);
    EXPECT_THROW(update_epsilon(st, std::nan("")), ConfigError);
}

TEST(Algorithm1, ZeroGradientStopsAfterOneCheck) {
    int calls = 0;
    const auto r = algorithm1(log_of({step(1, 1)}), 0.01,
                              [&](double) { ++calls; return std::vector<double>{1.0}; }, {});
    EXPECT_EQ(r.epsilon, 0.01);
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_EQ(calls, 0);
}

TEST(Algorithm1, CountMaxOneIsSingleStep) {
    Algorithm1Options o;
    o.count_max = 1;
    const auto r = algorithm1(log_of({step(2, 1, 2.0)}), 0.01,
                              [](double) { return std::vector<double>{0.0}; }, o);
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_DOUBLE_EQ(r.epsilon, 0.006);
}

TEST(Algorithm1, QuadraticLossConvergesToMinimizer) {
    // cost_exp(eps) = g0 + D (eps - eps0), cost_act = 0: minimizer eps0 - g0 / D.
    const double eps0 = 0.03;
    const double g0 = 0.05;
    const double D = 5.0;
    Algorithm1Options o;
    o.count_max = 100000;
    o.d_eps_min = 1e-12;
    const auto r = algorithm1(log_of({step(g0, 0.0, D)}), eps0,
                              [&](double e) { return std::vector<double>{g0 + D * (e - eps0)}; }, o);
    EXPECT_NEAR(r.epsilon, eps0 - g0 / D, 1e-9);
    EXPECT_LT(r.iterations, o.count_max);
}

TEST(Algorithm1, ZeroRadiusIsAbsorbing) {
    const auto r = algorithm1(log_of({step(-2, 1, 2.0)}), 0.0,
                              [](double) { return std::vector<double>{0.0}; }, {});
    EXPECT_EQ(r.epsilon, 0.0);
    EXPECT_EQ(r.iterations, 0u);
}

TEST(Algorithm1, ResolveSizeChecked) {
    EXPECT_THROW(algorithm1(log_of({step(2, 1, 2.0)}), 0.01,
                            [](double) { return std::vector<double>{}; }, {}),
                 DimensionError);
}

TEST(LinearizedLoss, SecondDifferenceMatchesClosedForm) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        LossTerms t;
        t.cost_gap = u(rng);
        t.cvar_act = std::abs(u(rng)) / 100;
        t.dcost = std::abs(u(rng));
        t.dcvar = std::abs(u(rng));
        const double h = 1e-3;
        const double e = 0.02;
        const double d2 = (linearized_loss(t, 0.01, e + h) - 2 * linearized_loss(t, 0.01, e) +
                           linearized_loss(t, 0.01, e - h)) / (h * h);
        EXPECT_NEAR(d2, 2 * t.dcost * t.dcost + 2 * t.dcvar * t.dcvar, 1e-5);
        EXPECT_GE(d2, -1e-8);
    }
}

}  // namespace
}  // namespace dsolab
