#pragma once

#include <vector>

#include "sanet/blocks.hpp"

namespace sanet {

// Adaptive-pool target expressed as per-axis divisors of the input size
// (rounding up); 0/0 is the global branch. Non-global grids use unequal
// divisors per axis so each axis is reduced at its own rate.
struct PoolGrid {
    int div_h = 0, div_w = 0;

    bool is_global() const { return div_h == 0 && div_w == 0; }
};

struct ApppmConfig {
    int in_c = 512;
    int branch_c = 128;
    int out_c = 128;
    std::vector<PoolGrid> grids = {{0, 0}, {2, 1}, {4, 2}};
};

void validate_apppm_config(const ApppmConfig& cfg);

// Pyramid with asymmetric pooling: per branch pool -> conv+BN+ReLU ->
// resize back; concat -> 3x3 fuse F; residual R = 1x1 conv+BN of the input;
// dual sigmoid attention A from 1x3/3x1 convs of F; out = 1x1 conv of
// F*(1+A) + R*(2-A).
struct Apppm {
    ApppmConfig cfg;
    std::vector<ConvUnit> scale;
    ConvUnit res, fuse;
    ConvUnit att_h, att_v;
    ConvUnit out;
};
Tensor4 apppm_forward(const Tensor4& y64, const Apppm& m);

struct PpmConfig {
    int in_c = 512;
    int branch_c = 128;
    int out_c = 128;
    std::vector<int> grids = {1, 2, 3, 6};
};

// Classic square-grid pyramid baseline: pool -> 1x1 conv+BN+ReLU -> resize,
// concat with the input, 3x3 fuse to out_c.
struct Ppm {
    PpmConfig cfg;
    std::vector<ConvUnit> scale;
    ConvUnit fuse;
};
Tensor4 ppm_forward(const Tensor4& y64, const Ppm& m);

} // namespace sanet
