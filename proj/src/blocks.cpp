#include "sanet/blocks.hpp"

namespace sanet {

Tensor4 conv_unit_forward(const Tensor4& x, const ConvUnit& u) {
    if (!u.has_bn) return conv2d(x, u.conv, u.relu);
    Tensor4 y = conv2d(x, u.conv);
    detail::bn_inplace(y, u.bn);
    if (u.relu) detail::relu_inplace(y);
    return y;
}

void fold_unit(ConvUnit& u) {
    if (!u.has_bn) return;
    fold_bn_into_conv(u.conv, u.bn);
    u.has_bn = false;
}

Tensor4 stem_forward(const Tensor4& img, const Stem& s) {
    if (img.c != s.c1.conv.weight.c)
        throw ShapeError("stem: expected " + std::to_string(s.c1.conv.weight.c) + " input channels, got " +
                         img.dims_str());
    return conv_unit_forward(conv_unit_forward(img, s.c1), s.c2);
}

Tensor4 basic_block_forward(const Tensor4& x, const BasicBlock& b) {
    Tensor4 main = conv_unit_forward(conv_unit_forward(x, b.c1), b.c2);
    if (b.proj) {
        detail::add_inplace(main, conv_unit_forward(x, *b.proj));
    } else {
        detail::add_inplace(main, x);
    }
    detail::relu_inplace(main);
    return main;
}

Tensor4 bottleneck_forward(const Tensor4& x, const BottleneckBlock& b) {
    Tensor4 main = conv_unit_forward(conv_unit_forward(conv_unit_forward(x, b.c1), b.c2), b.c3);
    detail::add_inplace(main, conv_unit_forward(x, b.proj));
    detail::relu_inplace(main);
    return main;
}

DpTaps dilated_path_forward(const Tensor4& l3_out, const DilatedPath& dp) {
    if (l3_out.c != dp.b0.c1.conv.weight.c)
        throw ShapeError("dilated path: expected " + std::to_string(dp.b0.c1.conv.weight.c) +
                         " input channels, got " + l3_out.dims_str());
    DpTaps taps;
    taps.dp1 = basic_block_forward(l3_out, dp.b0);
    taps.dp2 = basic_block_forward(taps.dp1, dp.b1);
    taps.x = conv_unit_forward(taps.dp2, dp.out);
    return taps;
}

Tensor4 head_forward(const Tensor4& x, const Head& h, int target_h, int target_w) {
    Tensor4 y = conv_unit_forward(conv_unit_forward(x, h.c1), h.out);
    if (y.h == target_h && y.w == target_w) return y;
    return bilinear_resize(y, target_h, target_w);
}

} // namespace sanet
