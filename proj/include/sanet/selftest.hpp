#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sanet {

/// Outcome of the randomized kernel verification suites. Each suite compares
/// an optimized kernel against its naive reference implementation on at least
/// 100 generated cases and reports the worst elementwise error observed.
struct SelftestResult {
    int suites = 0;
    int failed = 0;
    std::vector<std::string> lines;

    bool ok() const { return failed == 0; }
};

SelftestResult run_selftest(uint64_t seed = 7);

std::string format_selftest(const SelftestResult& r);

} // namespace sanet
