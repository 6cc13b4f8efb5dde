#pragma once

#include <vector>

#include "sanet/kernels.hpp"

namespace sanet {

// Attention convs are bare conv+bias (no BN, no activation beyond the
// sigmoids applied in the forward); out is the closing 1x1 conv.
struct SadWeights {
    ConvParams att_h; // 1x3, padding (0,1)
    ConvParams att_v; // 3x1, padding (1,0)
    ConvParams out;   // 1x1
};

// Intermediates saved by the forward for the analytic backward.
struct SadCache {
    Tensor4 x, y, dp_sum, z1, z2, a1, a2, a, fused;
};

// A1 = sigmoid(conv1x3(dp1+dp2)); A2 = sigmoid(conv3x1(dp1+dp2)); A = A1+A2;
// out = conv1x1(x*(1+A) + y*(2-A)).
Tensor4 sad_forward(const Tensor4& x, const Tensor4& dp1, const Tensor4& dp2, const Tensor4& y_up,
                    const SadWeights& w, SadCache* cache = nullptr);

struct SadGrads {
    Tensor4 x, dp1, dp2, y;
    Tensor4 att_h_w, att_v_w, out_w;
    std::vector<float> att_h_b, att_v_b, out_b;
};

// Chain-rule gradients for every input and weight tensor; convolution
// backward passes use direct summation with 64-bit accumulation.
SadGrads sad_backward(const SadCache& cache, const Tensor4& grad_out, const SadWeights& w);

// Flat double copies of (x, dp1, dp2, y, att_h.w, att_h.b, att_v.w,
// att_v.b, out.w, out.b), the parameter order shared with sad_eval_sum_f64
// and the finite-difference harness.
std::vector<std::vector<double>> sad_pack_f64(const Tensor4& x, const Tensor4& dp1, const Tensor4& dp2,
                                              const Tensor4& y_up, const SadWeights& w);
std::vector<std::vector<double>> sad_pack_grads_f64(const SadGrads& g);
std::vector<std::string> sad_param_names();

// Full-precision scalar objective: sum over the SAD output, evaluated
// entirely in double so central differences stay clean at eps ~ 1e-3.
double sad_eval_sum_f64(const std::vector<std::vector<double>>& params, int n, int c, int h, int w);

} // namespace sanet
