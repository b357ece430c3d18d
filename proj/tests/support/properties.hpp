#pragma once

// Randomized checks of the outlier rule, shared by the unit and acceptance
// suites. Each returns the failures it found, empty when all cases pass.

#include <cstdint>
#include <string>
#include <vector>

namespace unusual::testing {

struct PropertyReport {
    std::size_t cases = 0;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

/// detect_all against brute_force_detect on random snapshots.
PropertyReport check_oracle_equivalence(std::uint64_t seed, std::size_t snapshots);

/// Monotonicity in k, strict boundaries, constant groups, scale
/// equivariance and permutation invariance.
PropertyReport check_outlier_properties(std::uint64_t seed, std::size_t cases);

}  // namespace unusual::testing
