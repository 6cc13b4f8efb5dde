#pragma once

#include <optional>

#include "sanet/kernels.hpp"

namespace sanet {

// Conv with optional batch norm and ReLU; the building unit of every block.
// fold_unit() rewrites the conv in place and drops the separate BN pass.
struct ConvUnit {
    ConvParams conv;
    BnParams bn;
    bool has_bn = true;
    bool relu = true;
};

Tensor4 conv_unit_forward(const Tensor4& x, const ConvUnit& u);
void fold_unit(ConvUnit& u);

// Two stride-2 3x3 conv+BN+ReLU stages: 3 -> 32 -> 32 at 1/4 resolution.
struct Stem {
    ConvUnit c1, c2;
};
Tensor4 stem_forward(const Tensor4& img, const Stem& s);

// Residual block: conv3x3(stride, dilation)+BN+ReLU -> conv3x3+BN, plus a
// 1x1 projection shortcut when shape changes, then ReLU.
struct BasicBlock {
    ConvUnit c1, c2;
    std::optional<ConvUnit> proj;
};
Tensor4 basic_block_forward(const Tensor4& x, const BasicBlock& b);

// 1x1 reduce -> 3x3 stride-2 -> 1x1 expand with projection shortcut.
struct BottleneckBlock {
    ConvUnit c1, c2, c3;
    ConvUnit proj;
};
Tensor4 bottleneck_forward(const Tensor4& x, const BottleneckBlock& b);

// The 1/8-resolution spatial branch: two dilated residual blocks (rates 2
// and 4 by default) and a closing 3x3 conv+BN+ReLU.
struct DilatedPath {
    BasicBlock b0, b1;
    ConvUnit out;
};
struct DpTaps {
    Tensor4 dp1, dp2, x;
};
DpTaps dilated_path_forward(const Tensor4& l3_out, const DilatedPath& dp);

// conv3x3+BN+ReLU -> conv1x1 (bias) -> bilinear resize to the target size.
struct Head {
    ConvUnit c1, out;
};
Tensor4 head_forward(const Tensor4& x, const Head& h, int target_h, int target_w);

} // namespace sanet
