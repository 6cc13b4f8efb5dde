#pragma once

#include <string>
#include <vector>

#include "sanet/model.hpp"

namespace sanet {

struct BenchReport {
    int h = 0, w = 0;
    int warmup_iters = 0;
    int timed_iters = 0;
    bool fold_bn = false;
    std::string thread_mode = "single";
    std::vector<double> latencies_ms;
    double mean_ms = 0.0, median_ms = 0.0, min_ms = 0.0;
    double fps = 0.0;
    double cov = 0.0;
};

// Times repeated single-image forwards on a fixed synthetic input; warmup
// iterations never enter the statistics.
BenchReport run_bench(const Model& m, int h, int w, int iters, int warmup);

std::string format_bench(const BenchReport& r);
std::string bench_json(const BenchReport& r);

} // namespace sanet
