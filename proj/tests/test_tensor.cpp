#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
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
} // namespace

TEST_CASE("elementwise identities and hand case") {
    Tensor4 a = filled(1, 2, 3, 3, 1);
    Tensor4 zeros(1, 2, 3, 3, 0.0f), ones(1, 2, 3, 3, 1.0f);
    CHECK(add(a, zeros).data == a.data);
    CHECK(mul(a, ones).data == a.data);
    CHECK(sub(a, zeros).data == a.data);

    Tensor4 u(1, 1, 1, 2), v(1, 1, 1, 2);
    u.data = {1.0f, 2.0f};
    v.data = {3.0f, 4.0f};
    const Tensor4 s = add(u, v);
    CHECK(s.data[0] == 4.0f);
    CHECK(s.data[1] == 6.0f);

    CHECK(add_scalar(a, 0.0f).data == a.data);
    CHECK(mul_scalar(a, 1.0f).data == a.data);

    Tensor4 wrong(1, 2, 3, 4);
    CHECK_THROWS_AS(add(a, wrong), ShapeError);
}

TEST_CASE("concat_channels shape and placement") {
    Tensor4 a = filled(1, 2, 4, 4, 2);
    Tensor4 b = filled(1, 3, 4, 4, 3);

    const Tensor4 only = concat_channels(std::vector<Tensor4>{a});
    CHECK(only.same_shape(a));
    CHECK(only.data == a.data);

    const Tensor4 cat = concat_channels(a, b);
    CHECK(cat.n == 1);
    CHECK(cat.c == 5);
    CHECK(cat.h == 4);
    CHECK(cat.w == 4);
    // channel 2 of the output is channel 0 of the second part
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) CHECK(cat.at(0, 2, y, x) == b.at(0, 0, y, x));

    // slicing the concat recovers each part bit-exactly
    for (int ci = 0; ci < 2; ++ci)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) CHECK(cat.at(0, ci, y, x) == a.at(0, ci, y, x));
    for (int ci = 0; ci < 3; ++ci)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) CHECK(cat.at(0, 2 + ci, y, x) == b.at(0, ci, y, x));

    CHECK_THROWS_AS(concat_channels(std::vector<Tensor4>{}), ValueError);
    Tensor4 off = filled(1, 1, 4, 5, 4);
    CHECK_THROWS_AS(concat_channels(a, off), ShapeError);
}

TEST_CASE("softmax_channels closed forms") {
    Tensor4 zeros(1, 4, 2, 2, 0.0f);
    const Tensor4 uniform = softmax_channels(zeros);
    for (float v : uniform.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-7));

    Tensor4 two(1, 2, 1, 1);
    two.data = {0.0f, std::log(3.0f)};
    const Tensor4 p = softmax_channels(two);
    CHECK(p.data[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(p.data[1] == doctest::Approx(0.75).epsilon(1e-6));

    // shift invariance
    Tensor4 x = filled(1, 5, 3, 3, 5, -4.0f, 4.0f);
    Tensor4 shifted = add_scalar(x, 11.5f);
    const Tensor4 px = softmax_channels(x);
    const Tensor4 ps = softmax_channels(shifted);
    for (size_t i = 0; i < px.data.size(); ++i) CHECK(px.data[i] == doctest::Approx(ps.data[i]).epsilon(1e-6));
}

TEST_CASE("softmax rows sum to one for wide-range logits") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Tensor4 x = filled(1, 7, 4, 4, 100 + seed, -20.0f, 20.0f);
        const Tensor4 p = softmax_channels(x);
        for (int y = 0; y < 4; ++y)
            for (int xx = 0; xx < 4; ++xx) {
                double s = 0.0;
                for (int ci = 0; ci < 7; ++ci) s += p.at(0, ci, y, xx);
                CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
            }
    }
}

TEST_CASE("argmax_channels rules") {
    Tensor4 onehot(1, 5, 2, 2, 0.0f);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) onehot.at(0, 3, y, x) = 1.0f;
    const ClassMap m = argmax_channels(onehot);
    for (int32_t v : m.data) CHECK(v == 3);

    Tensor4 ties(1, 4, 2, 2, 0.7f);
    for (int32_t v : argmax_channels(ties).data) CHECK(v == 0);

    // brute-force scan oracle
    Tensor4 x = filled(1, 5, 3, 3, 6);
    const ClassMap got = argmax_channels(x);
    for (int y = 0; y < 3; ++y)
        for (int xx = 0; xx < 3; ++xx) {
            int best = 0;
            for (int ci = 1; ci < 5; ++ci)
                if (x.at(0, ci, y, xx) > x.at(0, best, y, xx)) best = ci;
            CHECK(got.at(y, xx) == best);
        }
}

TEST_CASE("argmax invariant under softmax") {
    for (uint64_t seed = 0; seed < 25; ++seed) {
        Tensor4 x = filled(1, 6, 3, 4, 30 + seed, -10.0f, 10.0f);
        const ClassMap direct = argmax_channels(x);
        const ClassMap through = argmax_channels(softmax_channels(x));
        CHECK(direct.data == through.data);
    }
}

TEST_CASE("finite in, finite out") {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Tensor4 a = filled(1, 3, 4, 4, 1000 + seed, -50.0f, 50.0f);
        Tensor4 b = filled(1, 3, 4, 4, 2000 + seed, -50.0f, 50.0f);
        for (const Tensor4& t : {add(a, b), sub(a, b), mul(a, b), softmax_channels(a)})
            for (float v : t.data) CHECK(std::isfinite(v));
    }
}
