#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "sanet/model.hpp"
#include "sanet/rf.hpp"
#include "sanet/rng.hpp"

using namespace sanet;

namespace {
Tensor4 filled(int n, int c, int h, int w, uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    Tensor4 t(n, c, h, w);
    SplitMix64 rng(seed);
    for (float& v : t.data) v = rng.uniform_in(lo, hi);
    return t;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
} // namespace

TEST_CASE("random-init weights build a runnable model") {
    const ModelConfig cfg = make_config('s', 5);
    const Model m = build(cfg, init_weights(cfg, 3));
    const Tensor4 logits = forward(m, filled(1, 3, 64, 64, 4, 0.0f, 1.0f));
    CHECK(logits.c == 5);
    CHECK(logits.h == 64);
    CHECK(logits.w == 64);
    CHECK(std::all_of(logits.data.begin(), logits.data.end(), [](float v) { return std::isfinite(v); }));
}

TEST_CASE("build names the first missing tensor") {
    const ModelConfig cfg = make_config('s', 5);
    const WeightStore full = init_weights(cfg, 3);
    WeightStore partial;
    for (const auto& [name, rec] : full.entries())
        if (name != "l2.b0.c1.w") partial.put(name, rec);
    CHECK_THROWS_WITH_AS(build(cfg, partial), doctest::Contains("l2.b0.c1.w"), Error);
}

TEST_CASE("frozen parameter counts per variant") {
    const uint64_t s_params = init_weights(make_config('s'), 1).value_count();
    const uint64_t m_params = init_weights(make_config('m'), 1).value_count();
    CHECK(s_params == 7442119);
    CHECK(m_params - s_params == 3642112);
    CHECK(m_params > s_params);
}

TEST_CASE("describe matches the store and the documented ladder") {
    const ModelConfig cfg = make_config('s');
    const WeightStore store = init_weights(cfg, 2);
    const LayerReport rep = describe(cfg, store, 1024, 2048);

    uint64_t brute = 0;
    for (const auto& [name, rec] : store.entries()) brute += rec.dim_product();
    CHECK(rep.total_params == brute);
    CHECK(rep.total_params == store.value_count());

    uint64_t staged = 0;
    for (const StageRecord& s : rep.stages) staged += s.params;
    CHECK(staged == rep.total_params);

    REQUIRE(rep.stages.size() == 13);
    const char* names[] = {"stem", "l1", "l2", "l3", "dp", "l4", "l5", "l6", "apppm"};
    const int chans[] = {32, 32, 64, 128, 128, 128, 256, 512, 128};
    const int reds[] = {4, 4, 8, 8, 8, 16, 32, 64, 64};
    for (int i = 0; i < 9; ++i) {
        CHECK(rep.stages[i].name == names[i]);
        CHECK(rep.stages[i].c == chans[i]);
        CHECK(rep.stages[i].reduction == reds[i]);
        CHECK(rep.stages[i].h == 1024 / rep.stages[i].reduction);
        CHECK(rep.stages[i].w == 2048 / rep.stages[i].reduction);
    }
    CHECK(rep.stages[10].name == "head");
    CHECK(rep.stages[10].c == 19);
    CHECK(rep.stages[10].h == 1024);

    const std::string text = format_report(rep);
    CHECK(text.find("stem") != std::string::npos);
    CHECK(text.find("512x16x32") != std::string::npos);
}

TEST_CASE("forward is deterministic and leaves its input alone") {
    const ModelConfig cfg = make_config('s', 4);
    const Model m = build(cfg, init_weights(cfg, 5));
    const Tensor4 img = filled(1, 3, 64, 64, 6, 0.0f, 1.0f);
    const std::vector<float> img_copy = img.data;

    const Tensor4 a = forward(m, img);
    const Tensor4 b = forward(m, img);
    CHECK(a.data == b.data);
    CHECK(img.data == img_copy);
}

TEST_CASE("single-scale inference agrees with plain forward") {
    const ModelConfig cfg = make_config('s', 4);
    const Model m = build(cfg, init_weights(cfg, 7));
    const Tensor4 img = filled(1, 3, 64, 64, 8, 0.0f, 1.0f);

    const ClassMap direct = argmax_channels(forward(m, img));
    const Tensor4 one = multi_scale_infer(m, img, {1.0});
    const ClassMap averaged = argmax_channels(one);
    CHECK(direct.data == averaged.data);

    const Tensor4 twice = multi_scale_infer(m, img, {1.0, 1.0});
    CHECK(one.data == twice.data);

    CHECK_THROWS_AS(multi_scale_infer(m, img, {}), ValueError);
    CHECK_THROWS_AS(multi_scale_infer(m, img, {1.0, -0.5}), ValueError);
}

TEST_CASE("weight files identify their variant and class count") {
    const ModelConfig s7 = make_config('s', 7);
    const ModelConfig m3 = make_config('m', 3);
    const ModelConfig got_s = config_from_store(init_weights(s7, 1));
    const ModelConfig got_m = config_from_store(init_weights(m3, 1));

    CHECK(got_s.variant == s7.variant);
    CHECK(got_s.num_classes == 7);
    CHECK(got_s.repeats == s7.repeats);
    CHECK(got_m.variant == m3.variant);
    CHECK(got_m.num_classes == 3);
    CHECK(got_m.repeats == m3.repeats);
    CHECK(got_m.repeats[4] == 9);
}

TEST_CASE("weight init is seed-reproducible with documented distributions") {
    const ModelConfig cfg = make_config('s', 6);
    const WeightStore a = init_weights(cfg, 11);
    const WeightStore b = init_weights(cfg, 11);
    const WeightStore c = init_weights(cfg, 12);
    CHECK(stf_bytes(a) == stf_bytes(b));
    CHECK(stf_bytes(a) != stf_bytes(c));

    const auto damped = [](const std::string& name) {
        if (name == "l6.b0.c3.bn.gamma") return true;
        return ends_with(name, ".c2.bn.gamma") && name.rfind("stem", 0) != 0 && name != "l6.b0.c2.bn.gamma";
    };
    size_t bn_violations = 0, bound_violations = 0, conv_tensors = 0, damped_tensors = 0;
    for (const auto& [name, rec] : a.entries()) {
        if (ends_with(name, ".bn.gamma")) {
            const float want = damped(name) ? 0.25f : 1.0f;
            damped_tensors += damped(name) ? 1 : 0;
            for (float v : rec.data)
                if (v != want) ++bn_violations;
        } else if (ends_with(name, ".bn.var")) {
            for (float v : rec.data)
                if (v != 1.0f) ++bn_violations;
        } else if (ends_with(name, ".bn.beta") || ends_with(name, ".bn.mean")) {
            for (float v : rec.data)
                if (v != 0.0f) ++bn_violations;
        } else if (ends_with(name, ".w")) {
            REQUIRE(rec.dims.size() == 4);
            ++conv_tensors;
            const double fan_in = static_cast<double>(rec.dims[1]) * rec.dims[2] * rec.dims[3];
            const double bound = std::sqrt(6.0 / fan_in);
            for (float v : rec.data)
                if (std::abs(static_cast<double>(v)) > bound) ++bound_violations;
        }
    }
    CHECK(conv_tensors > 50);
    CHECK(damped_tensors == 13);
    CHECK(bn_violations == 0);
    CHECK(bound_violations == 0);
}

TEST_CASE("receptive field composition on frozen chains") {
    const ConvStage k3{3, 3, 1, 1, 1, 1};
    const ConvStage k3s2{3, 3, 2, 2, 1, 1};
    const ConvStage k3d2{3, 3, 1, 1, 2, 2};
    CHECK(receptive_field({k3}) == std::pair<int, int>(3, 3));
    CHECK(receptive_field({k3, k3}) == std::pair<int, int>(5, 5));
    CHECK(receptive_field({k3d2}) == std::pair<int, int>(5, 5));
    CHECK(receptive_field({k3s2, k3}) == std::pair<int, int>(7, 7));
    CHECK(receptive_field({ConvStage{1, 3, 1, 1, 1, 1}}) == std::pair<int, int>(1, 3));
    CHECK_THROWS_AS((void)receptive_field({}), ValueError);
    CHECK_THROWS_AS((void)receptive_field({ConvStage{0, 3, 1, 1, 1, 1}}), ValueError);
}

TEST_CASE("impulse scan reproduces the analytic receptive field exactly") {
    SplitMix64 rng(99);
    const int ks[] = {1, 2, 3, 5};
    const int ss[] = {1, 2, 3};
    const int ds[] = {1, 2, 4};
    for (int trial = 0; trial < 30; ++trial) {
        const int depth = 1 + static_cast<int>(rng.next() % 4);
        std::vector<ConvStage> chain;
        for (int i = 0; i < depth; ++i) {
            ConvStage s;
            s.kh = ks[rng.next() % 4];
            s.kw = ks[rng.next() % 4];
            s.sh = ss[rng.next() % 3];
            s.sw = ss[rng.next() % 3];
            s.dh = ds[rng.next() % 3];
            s.dw = ds[rng.next() % 3];
            chain.push_back(s);
        }
        const auto [rh, rw] = receptive_field(chain);
        CHECK(impulse_support_span(chain, false) == rh);
        CHECK(impulse_support_span(chain, true) == rw);
    }

    std::vector<ConvStage> deep(6, ConvStage{3, 3, 1, 1, 1, 1});
    deep[1].sh = deep[1].sw = 2;
    deep[3].dh = deep[3].dw = 2;
    const auto [rh, rw] = receptive_field(deep);
    CHECK(impulse_support_span(deep, false) == rh);
    CHECK(impulse_support_span(deep, true) == rw);
}

TEST_CASE("frozen analytic receptive fields of the main path") {
    const ModelConfig cfg = make_config('s');
    CHECK(receptive_field(model_rf_chain(cfg, RfPoint::L3)) == std::pair<int, int>(159, 159));
    CHECK(receptive_field(model_rf_chain(cfg, RfPoint::Dp2)) == std::pair<int, int>(351, 351));
    CHECK(receptive_field(model_rf_chain(cfg, RfPoint::DpOut)) == std::pair<int, int>(367, 367));
    CHECK(receptive_field(model_rf_chain(cfg, RfPoint::L6)) == std::pair<int, int>(559, 559));
}

TEST_CASE("measured support grows strictly along the path") {
    const ModelConfig cfg = make_config('s');
    const ModelSupport sup = impulse_support_all(cfg, 512, 512);
    REQUIRE_FALSE(sup.l3.empty());
    REQUIRE_FALSE(sup.dp2.empty());
    REQUIRE_FALSE(sup.l6.empty());

    CHECK(sup.l3.height() < sup.dp2.height());
    CHECK(sup.dp2.height() < sup.l6.height());
    CHECK(sup.l3.width() < sup.dp2.width());
    CHECK(sup.dp2.width() < sup.l6.width());
    CHECK(sup.dp2.contains(sup.l3));
    CHECK(sup.l6.contains(sup.dp2));

    CHECK(sup.l3.y0 >= 0);
    CHECK(sup.l6.y1 < 512);
    CHECK(sup.l6.x1 < 512);
}
