#include "dsolab/oracle/checks.hpp"

#include <gtest/gtest.h>

namespace dsolab::oracle {
namespace {

constexpr std::uint64_t kSeed = 2024;

void expect_pass(const CheckResult& r) { EXPECT_TRUE(r.passed) << r.name << ": " << r.detail; }

TEST(CrossCheck, DroAgainstGrid) { expect_pass(check_dro_grid(kSeed)); }
TEST(CrossCheck, WorstCostAgainstTransportLp) { expect_pass(check_transport(kSeed + 1)); }
TEST(CrossCheck, GradientAgainstFiniteDifference) { expect_pass(check_gradient(kSeed + 2)); }
TEST(CrossCheck, LearningRoundTrip) { expect_pass(check_learning(kSeed + 3)); }
TEST(CrossCheck, DeraAgainstGrid) { expect_pass(check_dera(kSeed + 4)); }
TEST(CrossCheck, CvarAgainstTauGrid) { expect_pass(check_cvar(kSeed + 5)); }
TEST(CrossCheck, LossConvexity) { expect_pass(check_convexity(kSeed + 6)); }

// A second seed guards against a lucky draw.
TEST(CrossCheck, OtherSeedAlsoPasses) {
    for (const auto& r : run_cross_checks(77)) expect_pass(r);
}

}  // namespace
}  // namespace dsolab::oracle
