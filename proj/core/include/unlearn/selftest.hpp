#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace unlearn {

struct SelfTestResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Lemma-1 identity, the uniform-MSE bounds, cross-entropy floor, and
// gradient checks under both loss specifications.
std::vector<SelfTestResult> run_selftest(std::uint64_t seed);

} // namespace unlearn
