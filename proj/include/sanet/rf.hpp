#pragma once

#include <utility>
#include <vector>

#include "sanet/model.hpp"

namespace sanet {

struct ConvStage {
    int kh = 1, kw = 1;
    int sh = 1, sw = 1;
    int dh = 1, dw = 1;
};

// Classic composition r <- r + (k-1)*d*j, j <- j*s, per axis; returns (rh, rw).
std::pair<int, int> receptive_field(const std::vector<ConvStage>& chain);

enum class RfPoint { Stem, L1, L2, L3, Dp1, Dp2, DpOut, L4, L5, L6 };

// Main-path convolution chain from the input up to the named point.
std::vector<ConvStage> model_rf_chain(const ModelConfig& cfg, RfPoint upto);

// Empirical receptive field of one axis of a conv chain: scans an input
// impulse across a 1-pixel-wide probe and measures which positions reach a
// fixed interior output. Exact (all-ones weights cannot cancel).
int impulse_support_span(const std::vector<ConvStage>& chain, bool axis_w);

struct SupportBox {
    int y0 = 0, y1 = -1, x0 = 0, x1 = -1;

    bool empty() const { return y1 < y0 || x1 < x0; }
    int height() const { return y1 - y0 + 1; }
    int width() const { return x1 - x0 + 1; }
    bool contains(const SupportBox& o) const {
        return y0 <= o.y0 && x0 <= o.x0 && y1 >= o.y1 && x1 >= o.x1;
    }
};

struct ModelSupport {
    SupportBox l3, dp2, l6;
    int in_h = 0, in_w = 0;
};

// Forward an impulse through a positive-weight surrogate of the encoder and
// project the influenced output region of each tap back to input pixels.
ModelSupport impulse_support_all(const ModelConfig& cfg, int in_h, int in_w);
SupportBox impulse_support(const ModelConfig& cfg, RfPoint prefix, int in_h, int in_w);

} // namespace sanet
