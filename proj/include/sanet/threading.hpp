#pragma once

#include <cstdint>
#include <functional>

namespace sanet {

/// Set the kernel-internal worker count. 1 (the default) is the deterministic
/// single-thread mode used by all accuracy tests; 0 resolves to the hardware
/// concurrency.
void set_threads(int n);

// resolved worker count, always >= 1
int thread_count();

// Splits [begin, end) into contiguous chunks, one per worker. Serial when
// thread_count() == 1. Chunks never overlap, so workers write disjoint output.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& fn);

} // namespace sanet
