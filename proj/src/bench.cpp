#include "sanet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "sanet/rng.hpp"
#include "sanet/threading.hpp"

namespace sanet {

BenchReport run_bench(const Model& m, int h, int w, int iters, int warmup) {
    if (iters < 1 || warmup < 0) throw ValueError("bench: iters must be >= 1 and warmup >= 0");
    Tensor4 img(1, 3, h, w);
    SplitMix64 rng(0x5eed);
    for (float& v : img.data) v = rng.uniform_in(-1.0f, 1.0f);

    BenchReport r;
    r.h = h;
    r.w = w;
    r.warmup_iters = warmup;
    r.timed_iters = iters;
    r.thread_mode = thread_count() == 1 ? "single" : "auto";

    using clock = std::chrono::steady_clock;
    for (int i = 0; i < warmup; ++i) forward(m, img);
    r.latencies_ms.reserve(static_cast<size_t>(iters));
    for (int i = 0; i < iters; ++i) {
        const auto t0 = clock::now();
        forward(m, img);
        const auto t1 = clock::now();
        r.latencies_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }

    double sum = 0.0;
    r.min_ms = r.latencies_ms.front();
    for (double v : r.latencies_ms) {
        sum += v;
        r.min_ms = std::min(r.min_ms, v);
    }
    r.mean_ms = sum / iters;
    std::vector<double> sorted = r.latencies_ms;
    std::sort(sorted.begin(), sorted.end());
    r.median_ms = iters % 2 ? sorted[iters / 2] : 0.5 * (sorted[iters / 2 - 1] + sorted[iters / 2]);
    double var = 0.0;
    for (double v : r.latencies_ms) var += (v - r.mean_ms) * (v - r.mean_ms);
    var /= iters;
    r.cov = r.mean_ms > 0.0 ? std::sqrt(var) / r.mean_ms : 0.0;
    r.fps = 1000.0 / r.mean_ms;
    return r;
}

std::string format_bench(const BenchReport& r) {
    std::ostringstream os;
    os << "input: 1x3x" << r.h << "x" << r.w << "\n"
       << "threads: " << r.thread_mode << "\n"
       << "fold_bn: " << (r.fold_bn ? "on" : "off") << "\n"
       << "warmup_iters: " << r.warmup_iters << "\n"
       << "timed_iters: " << r.timed_iters << "\n";
    os.precision(4);
    os << std::fixed;
    os << "mean_ms: " << r.mean_ms << "\n"
       << "median_ms: " << r.median_ms << "\n"
       << "min_ms: " << r.min_ms << "\n"
       << "fps: " << r.fps << "\n"
       << "cov: " << r.cov << "\n";
    return os.str();
}

std::string bench_json(const BenchReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "{\n"
       << "  \"input\": [1, 3, " << r.h << ", " << r.w << "],\n"
       << "  \"threads\": \"" << r.thread_mode << "\",\n"
       << "  \"fold_bn\": " << (r.fold_bn ? "true" : "false") << ",\n"
       << "  \"warmup_iters\": " << r.warmup_iters << ",\n"
       << "  \"timed_iters\": " << r.timed_iters << ",\n"
       << "  \"mean_ms\": " << r.mean_ms << ",\n"
       << "  \"median_ms\": " << r.median_ms << ",\n"
       << "  \"min_ms\": " << r.min_ms << ",\n"
       << "  \"fps\": " << r.fps << ",\n"
       << "  \"cov\": " << r.cov << ",\n"
       << "  \"latencies_ms\": [";
    for (size_t i = 0; i < r.latencies_ms.size(); ++i) os << (i ? ", " : "") << r.latencies_ms[i];
    os << "]\n}\n";
    return os.str();
}

} // namespace sanet
