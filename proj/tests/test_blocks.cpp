#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "sanet/blocks.hpp"
#include "sanet/rng.hpp"
#include "sanet/tensor.hpp"

using namespace sanet;

namespace {
Tensor4 filled(int n, int c, int h, int w, uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    Tensor4 t(n, c, h, w);
    SplitMix64 rng(seed);
    for (float& v : t.data) v = rng.uniform_in(lo, hi);
    return t;
}

BnParams neutral_bn(int c) {
    BnParams bn;
    bn.gamma.assign(c, 1.0f);
    bn.beta.assign(c, 0.0f);
    bn.mean.assign(c, 0.0f);
    bn.var.assign(c, 1.0f);
    return bn;
}

BnParams random_bn(int c, uint64_t seed) {
    BnParams bn;
    SplitMix64 rng(seed);
    for (int i = 0; i < c; ++i) {
        bn.gamma.push_back(rng.uniform_in(0.5f, 1.5f));
        bn.beta.push_back(rng.uniform_in(-0.5f, 0.5f));
        bn.mean.push_back(rng.uniform_in(-0.5f, 0.5f));
        bn.var.push_back(rng.uniform_in(0.2f, 1.5f));
    }
    return bn;
}

ConvUnit unit(int out_c, int in_c, int kh, int kw, int stride, int pad_h, int pad_w, int dil,
              uint64_t seed, bool relu = true) {
    ConvUnit u;
    u.conv.weight = seed == 0 ? Tensor4(out_c, in_c, kh, kw, 0.0f) : filled(out_c, in_c, kh, kw, seed, -0.3f, 0.3f);
    u.conv.sh = u.conv.sw = stride;
    u.conv.ph = pad_h;
    u.conv.pw = pad_w;
    u.conv.dh = u.conv.dw = dil;
    u.bn = seed == 0 ? neutral_bn(out_c) : random_bn(out_c, seed + 101);
    u.relu = relu;
    return u;
}

double max_rel(const Tensor4& got, const Tensor4& want) {
    REQUIRE(got.same_shape(want));
    double maxd = 0.0, maxv = 0.0;
    for (size_t i = 0; i < got.data.size(); ++i) {
        maxd = std::max(maxd, std::abs(static_cast<double>(got.data[i]) - want.data[i]));
        maxv = std::max(maxv, std::abs(static_cast<double>(want.data[i])));
    }
    return maxd / std::max(1e-6, maxv);
}

int nonzero_row_span(const Tensor4& t, int ci) {
    int lo = t.h, hi = -1;
    for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x)
            if (t.at(0, ci, y, x) != 0.0f) {
                lo = std::min(lo, y);
                hi = std::max(hi, y);
            }
    return hi - lo + 1;
}
} // namespace

TEST_CASE("conv unit equals conv/bn/relu composition") {
    const Tensor4 x = filled(1, 3, 7, 8, 40);
    const ConvUnit u = unit(5, 3, 3, 3, 1, 1, 1, 1, 41);
    const Tensor4 got = conv_unit_forward(x, u);
    const Tensor4 want = relu(batch_norm_infer(conv2d(x, u.conv), u.bn));
    CHECK(max_rel(got, want) <= 1e-6);
}

TEST_CASE("fold_unit preserves the unit function") {
    const Tensor4 x = filled(1, 4, 6, 6, 42);
    ConvUnit u = unit(4, 4, 3, 3, 1, 1, 1, 1, 43);
    const Tensor4 before = conv_unit_forward(x, u);
    fold_unit(u);
    CHECK_FALSE(u.has_bn);
    const Tensor4 after = conv_unit_forward(x, u);
    double maxd = 0.0;
    for (size_t i = 0; i < before.data.size(); ++i)
        maxd = std::max(maxd, std::abs(static_cast<double>(before.data[i]) - after.data[i]));
    CHECK(maxd <= 1e-4);
}

TEST_CASE("stem halves twice with 32 channels") {
    Stem s;
    s.c1 = unit(32, 3, 3, 3, 2, 1, 1, 1, 44);
    s.c2 = unit(32, 32, 3, 3, 2, 1, 1, 1, 45);

    const Tensor4 a = stem_forward(filled(1, 3, 64, 64, 46), s);
    CHECK(a.c == 32);
    CHECK(a.h == 16);
    CHECK(a.w == 16);

    const Tensor4 b = stem_forward(Tensor4(1, 3, 720, 960, 0.1f), s);
    CHECK(b.h == 180);
    CHECK(b.w == 240);

    CHECK_THROWS_AS(stem_forward(Tensor4(1, 4, 64, 64), s), ShapeError);
}

TEST_CASE("basic block degenerate weight cases") {
    const Tensor4 x = filled(1, 6, 8, 8, 47);

    BasicBlock zero;
    zero.c1 = unit(6, 6, 3, 3, 1, 1, 1, 1, 0);
    zero.c2 = unit(6, 6, 3, 3, 1, 1, 1, 1, 0, false);
    zero.proj = unit(6, 6, 1, 1, 1, 0, 0, 1, 0, false);
    for (float v : basic_block_forward(x, zero).data) CHECK(v == 0.0f);

    BasicBlock ident = zero;
    ident.proj.reset();
    const Tensor4 want = relu(x);
    CHECK(basic_block_forward(x, ident).data == want.data);
}

TEST_CASE("basic block equals kernel composition") {
    for (int stride : {1, 2}) {
        const Tensor4 x = filled(1, 4, 9, 10, 48 + stride);
        BasicBlock b;
        b.c1 = unit(8, 4, 3, 3, stride, 1, 1, 1, 50 + stride);
        b.c2 = unit(8, 8, 3, 3, 1, 1, 1, 1, 52 + stride, false);
        b.proj = unit(8, 4, 1, 1, stride, 0, 0, 1, 54 + stride, false);

        Tensor4 main = conv_unit_forward(x, b.c1);
        main = conv_unit_forward(main, b.c2);
        const Tensor4 shortcut = conv_unit_forward(x, *b.proj);
        const Tensor4 want = relu(add(main, shortcut));
        CHECK(max_rel(basic_block_forward(x, b), want) <= 1e-5);
    }
}

TEST_CASE("basic block rejects a mismatched residual join") {
    BasicBlock b;
    b.c1 = unit(8, 4, 3, 3, 1, 1, 1, 1, 60);
    b.c2 = unit(8, 8, 3, 3, 1, 1, 1, 1, 61, false);
    CHECK_THROWS_AS(basic_block_forward(filled(1, 4, 6, 6, 62), b), ShapeError);
}

TEST_CASE("bottleneck maps 256x64x32 to 512x32x16") {
    BottleneckBlock l6;
    l6.c1 = unit(256, 256, 1, 1, 1, 0, 0, 1, 63);
    l6.c2 = unit(256, 256, 3, 3, 2, 1, 1, 1, 64);
    l6.c3 = unit(512, 256, 1, 1, 1, 0, 0, 1, 65, false);
    l6.proj = unit(512, 256, 1, 1, 2, 0, 0, 1, 66, false);

    const Tensor4 x = filled(1, 256, 64, 32, 67, -0.1f, 0.1f);
    const Tensor4 y = bottleneck_forward(x, l6);
    CHECK(y.c == 512);
    CHECK(y.h == 32);
    CHECK(y.w == 16);
}

TEST_CASE("bottleneck zero weights and composition oracle") {
    BottleneckBlock z;
    z.c1 = unit(4, 4, 1, 1, 1, 0, 0, 1, 0);
    z.c2 = unit(4, 4, 3, 3, 2, 1, 1, 1, 0);
    z.c3 = unit(8, 4, 1, 1, 1, 0, 0, 1, 0, false);
    z.proj = unit(8, 4, 1, 1, 2, 0, 0, 1, 0, false);
    for (float v : bottleneck_forward(filled(1, 4, 8, 8, 70), z).data) CHECK(v == 0.0f);

    BottleneckBlock b;
    b.c1 = unit(4, 4, 1, 1, 1, 0, 0, 1, 71);
    b.c2 = unit(4, 4, 3, 3, 2, 1, 1, 1, 72);
    b.c3 = unit(8, 4, 1, 1, 1, 0, 0, 1, 73, false);
    b.proj = unit(8, 4, 1, 1, 2, 0, 0, 1, 74, false);
    const Tensor4 x = filled(1, 4, 8, 8, 75);
    Tensor4 main = conv_unit_forward(x, b.c1);
    main = conv_unit_forward(main, b.c2);
    main = conv_unit_forward(main, b.c3);
    const Tensor4 want = relu(add(main, conv_unit_forward(x, b.proj)));
    CHECK(max_rel(bottleneck_forward(x, b), want) <= 1e-5);
}

namespace {
DilatedPath make_dp(int c, uint64_t seed) {
    DilatedPath dp;
    dp.b0.c1 = unit(c, c, 3, 3, 1, 2, 2, 2, seed);
    dp.b0.c2 = unit(c, c, 3, 3, 1, 2, 2, 2, seed ? seed + 1 : 0, false);
    dp.b1.c1 = unit(c, c, 3, 3, 1, 4, 4, 4, seed ? seed + 2 : 0);
    dp.b1.c2 = unit(c, c, 3, 3, 1, 4, 4, 4, seed ? seed + 3 : 0, false);
    dp.out = unit(c, c, 3, 3, 1, 1, 1, 1, seed ? seed + 4 : 0);
    return dp;
}
} // namespace

TEST_CASE("dilated path preserves dims across all taps") {
    const DilatedPath dp = make_dp(8, 80);
    const Tensor4 x = filled(1, 8, 19, 23, 81);
    const DpTaps taps = dilated_path_forward(x, dp);
    for (const Tensor4* t : {&taps.dp1, &taps.dp2, &taps.x}) {
        CHECK(t->c == 8);
        CHECK(t->h == 19);
        CHECK(t->w == 23);
    }
}

TEST_CASE("dilated path zero weights reduce to stacked ReLU identities") {
    const DilatedPath dp = make_dp(5, 0);
    const Tensor4 x = filled(1, 5, 9, 9, 82);
    const DpTaps taps = dilated_path_forward(x, dp);
    const Tensor4 r = relu(x);
    CHECK(taps.dp1.data == r.data);
    CHECK(taps.dp2.data == relu(r).data);
    for (float v : taps.x.data) CHECK(v == 0.0f);
}

TEST_CASE("dilated path equals block composition") {
    const DilatedPath dp = make_dp(6, 84);
    const Tensor4 x = filled(1, 6, 11, 13, 85);
    const DpTaps taps = dilated_path_forward(x, dp);
    const Tensor4 dp1 = basic_block_forward(x, dp.b0);
    const Tensor4 dp2 = basic_block_forward(dp1, dp.b1);
    const Tensor4 out = conv_unit_forward(dp2, dp.out);
    CHECK(max_rel(taps.dp1, dp1) <= 1e-6);
    CHECK(max_rel(taps.dp2, dp2) <= 1e-6);
    CHECK(max_rel(taps.x, out) <= 1e-6);
}

TEST_CASE("higher dilation widens the impulse support") {
    DilatedPath dp = make_dp(1, 0);
    auto positive = [](ConvUnit& u) { u.conv.weight.data.assign(u.conv.weight.data.size(), 0.2f); };
    positive(dp.b0.c1);
    positive(dp.b0.c2);
    positive(dp.b1.c1);
    positive(dp.b1.c2);
    positive(dp.out);

    Tensor4 impulse(1, 1, 33, 33, 0.0f);
    impulse.at(0, 0, 16, 16) = 1.0f;
    const DpTaps taps = dilated_path_forward(impulse, dp);
    const int span1 = nonzero_row_span(taps.dp1, 0);
    const int span2 = nonzero_row_span(taps.dp2, 0);
    CHECK(span1 == 9);
    CHECK(span2 == 25);
    CHECK(span2 > span1);
}

TEST_CASE("head emits the requested channel count at the target size") {
    Head h;
    h.c1 = unit(16, 8, 3, 3, 1, 1, 1, 1, 90);
    h.out = unit(19, 16, 1, 1, 1, 0, 0, 1, 91, false);
    h.out.has_bn = false;
    h.out.conv.bias.assign(19, 0.0f);

    const Tensor4 x = filled(1, 8, 16, 16, 92);
    const Tensor4 y = head_forward(x, h, 128, 128);
    CHECK(y.c == 19);
    CHECK(y.h == 128);
    CHECK(y.w == 128);

    Head bnd = h;
    bnd.out = unit(1, 16, 1, 1, 1, 0, 0, 1, 93, false);
    bnd.out.has_bn = false;
    bnd.out.conv.bias = {0.0f};
    CHECK(head_forward(x, bnd, 64, 64).c == 1);
}

TEST_CASE("zero-weight head emits constant bias logits") {
    Head h;
    h.c1 = unit(4, 3, 3, 3, 1, 1, 1, 1, 0);
    h.out = unit(2, 4, 1, 1, 1, 0, 0, 1, 0, false);
    h.out.has_bn = false;
    h.out.conv.bias = {0.75f, -0.25f};

    const Tensor4 y = head_forward(filled(1, 3, 8, 8, 94), h, 32, 32);
    for (int i = 0; i < 32 * 32; ++i) {
        CHECK(y.plane(0, 0)[i] == 0.75f);
        CHECK(y.plane(0, 1)[i] == -0.25f);
    }
}
