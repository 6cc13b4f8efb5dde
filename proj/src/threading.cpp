#include "sanet/threading.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace sanet {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) { g_threads.store(n < 0 ? 1 : n); }

int thread_count() {
    int n = g_threads.load();
    if (n == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }
    return n;
}

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& fn) {
    const int64_t total = end - begin;
    if (total <= 0) return;
    int workers = thread_count();
    if (workers > total) workers = static_cast<int>(total);
    if (workers <= 1) {
        fn(begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const int64_t chunk = (total + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        int64_t lo = begin + t * chunk;
        int64_t hi = lo + chunk < end ? lo + chunk : end;
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace sanet
