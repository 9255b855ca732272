#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dsolab::oracle {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

CheckResult check_dro_grid(std::uint64_t seed, int instances = 20);
CheckResult check_transport(std::uint64_t seed);
CheckResult check_gradient(std::uint64_t seed, int instances = 20);
CheckResult check_learning(std::uint64_t seed, int instances = 100);
CheckResult check_dera(std::uint64_t seed, int instances = 50);
CheckResult check_cvar(std::uint64_t seed, int instances = 50);
CheckResult check_convexity(std::uint64_t seed);

/// Every check above, in order.
std::vector<CheckResult> run_cross_checks(std::uint64_t seed);

}  // namespace dsolab::oracle
