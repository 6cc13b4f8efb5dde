#pragma once

#include <vector>

#include "sanet/tensor.hpp"

namespace sanet {

// Convolution weights plus geometry. Weight layout is (out_c, in_c, kh, kw);
// an empty bias vector means no bias term.
struct ConvParams {
    Tensor4 weight;
    std::vector<float> bias;
    int sh = 1, sw = 1;
    int ph = 0, pw = 0;
    int dh = 1, dw = 1;
};

struct BnParams {
    std::vector<float> gamma, beta, mean, var;
    float eps = 1e-5f;
};

int conv_out_extent(int in, int k, int stride, int pad, int dil);

// im2col + GEMM path used by the engine. fuse_relu clamps each output block
// in the epilogue while it is still cache-resident, sparing a full pass.
Tensor4 conv2d(const Tensor4& x, const ConvParams& p, bool fuse_relu = false);
// Plain nested-loop evaluation with 64-bit accumulation. Kept simple on
// purpose: it is the cross-check for conv2d, not a fast path.
Tensor4 conv2d_reference(const Tensor4& x, const ConvParams& p);

Tensor4 batch_norm_infer(const Tensor4& x, const BnParams& bn);
// Rewrites conv weights/bias so conv(x) == bn(conv(x)) within float error.
void fold_bn_into_conv(ConvParams& conv, const BnParams& bn);

Tensor4 relu(const Tensor4& x);
Tensor4 sigmoid(const Tensor4& x);

Tensor4 avg_pool2d(const Tensor4& x, int kh, int kw, int sh, int sw, int ph = 0, int pw = 0,
                   bool count_includes_pad = false);
Tensor4 adaptive_avg_pool2d(const Tensor4& x, int oh, int ow);

// Bilinear interpolation with half-pixel source centers, clamped at borders.
Tensor4 bilinear_resize(const Tensor4& x, int oh, int ow);

namespace detail {
void relu_inplace(Tensor4& x);
void bn_inplace(Tensor4& x, const BnParams& bn);
void add_inplace(Tensor4& x, const Tensor4& y);
} // namespace detail

} // namespace sanet
