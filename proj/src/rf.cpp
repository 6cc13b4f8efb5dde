#include "sanet/rf.hpp"

#include <algorithm>

namespace sanet {

std::pair<int, int> receptive_field(const std::vector<ConvStage>& chain) {
    if (chain.empty()) throw ValueError("receptive_field: empty chain");
    long rh = 1, rw = 1, jh = 1, jw = 1;
    for (const ConvStage& s : chain) {
        if (s.kh < 1 || s.kw < 1 || s.sh < 1 || s.sw < 1 || s.dh < 1 || s.dw < 1)
            throw ValueError("receptive_field: kernel/stride/dilation must be positive");
        rh += static_cast<long>(s.kh - 1) * s.dh * jh;
        rw += static_cast<long>(s.kw - 1) * s.dw * jw;
        jh *= s.sh;
        jw *= s.sw;
    }
    return {static_cast<int>(rh), static_cast<int>(rw)};
}

namespace {

void append_basic(std::vector<ConvStage>& chain, int stride, int dil, int repeats) {
    for (int i = 0; i < repeats; ++i) {
        chain.push_back({3, 3, i == 0 ? stride : 1, i == 0 ? stride : 1, dil, dil});
        chain.push_back({3, 3, 1, 1, dil, dil});
    }
}

} // namespace

std::vector<ConvStage> model_rf_chain(const ModelConfig& cfg, RfPoint upto) {
    std::vector<ConvStage> chain;
    chain.push_back({3, 3, 2, 2, 1, 1});
    chain.push_back({3, 3, 2, 2, 1, 1});
    if (upto == RfPoint::Stem) return chain;
    append_basic(chain, 1, 1, cfg.repeats[1]);
    if (upto == RfPoint::L1) return chain;
    append_basic(chain, 2, 1, cfg.repeats[2]);
    if (upto == RfPoint::L2) return chain;
    append_basic(chain, 1, 1, cfg.repeats[3]);
    if (upto == RfPoint::L3) return chain;
    if (upto == RfPoint::Dp1 || upto == RfPoint::Dp2 || upto == RfPoint::DpOut) {
        append_basic(chain, 1, cfg.dp_dil1, 1);
        if (upto == RfPoint::Dp1) return chain;
        append_basic(chain, 1, cfg.dp_dil2, 1);
        if (upto == RfPoint::Dp2) return chain;
        chain.push_back({3, 3, 1, 1, 1, 1});
        return chain;
    }
    append_basic(chain, 2, 1, cfg.repeats[4]);
    if (upto == RfPoint::L4) return chain;
    append_basic(chain, 2, 1, cfg.repeats[5]);
    if (upto == RfPoint::L5) return chain;
    chain.push_back({1, 1, 1, 1, 1, 1});
    chain.push_back({3, 3, 2, 2, 1, 1});
    chain.push_back({1, 1, 1, 1, 1, 1});
    return chain;
}

int impulse_support_span(const std::vector<ConvStage>& chain, bool axis_w) {
    const auto [rh, rw] = receptive_field(chain);
    const int analytic = axis_w ? rw : rh;
    const int probe = 4 * analytic + 17;

    std::vector<ConvParams> convs;
    convs.reserve(chain.size());
    for (const ConvStage& s : chain) {
        ConvParams p;
        p.weight = axis_w ? Tensor4(1, 1, 1, s.kw, 1.0f) : Tensor4(1, 1, s.kh, 1, 1.0f);
        p.sh = axis_w ? 1 : s.sh;
        p.sw = axis_w ? s.sw : 1;
        p.dh = axis_w ? 1 : s.dh;
        p.dw = axis_w ? s.dw : 1;
        convs.push_back(std::move(p));
    }

    int out_mid = -1;
    int lo = -1, hi = -1;
    for (int pos = 0; pos < probe; ++pos) {
        Tensor4 t = axis_w ? Tensor4(1, 1, 1, probe) : Tensor4(1, 1, probe, 1);
        t.data[pos] = 1.0f;
        for (const ConvParams& p : convs) t = conv2d_reference(t, p);
        if (out_mid < 0) out_mid = static_cast<int>(t.data.size()) / 2;
        if (t.data[out_mid] > 0.0f) {
            if (lo < 0) lo = pos;
            hi = pos;
        }
    }
    if (lo < 0) throw Error("impulse scan: no input position reached the probe output");
    return hi - lo + 1;
}

namespace {

void renorm(Tensor4& t) {
    float mx = 0.0f;
    for (float v : t.data) mx = std::max(mx, v);
    if (mx > 0.0f) {
        const float inv = 1.0f / mx;
        for (float& v : t.data) v *= inv;
    }
}

SupportBox nonzero_box(const Tensor4& t) {
    SupportBox box{t.h, -1, t.w, -1};
    for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x) {
            bool hit = false;
            for (int c = 0; c < t.c && !hit; ++c) hit = t.at(0, c, y, x) > 0.0f;
            if (hit) {
                box.y0 = std::min(box.y0, y);
                box.y1 = std::max(box.y1, y);
                box.x0 = std::min(box.x0, x);
                box.x1 = std::max(box.x1, x);
            }
        }
    return box;
}

SupportBox project_to_input(const SupportBox& out_box, int stride, int in_h, int in_w) {
    if (out_box.empty()) return out_box;
    SupportBox b;
    b.y0 = out_box.y0 * stride;
    b.x0 = out_box.x0 * stride;
    b.y1 = std::min(in_h - 1, out_box.y1 * stride + stride - 1);
    b.x1 = std::min(in_w - 1, out_box.x1 * stride + stride - 1);
    return b;
}

} // namespace

ModelSupport impulse_support_all(const ModelConfig& cfg, int in_h, int in_w) {
    const Model m = build_surrogate(cfg);
    Tensor4 img(1, 3, in_h, in_w);
    for (int c = 0; c < 3; ++c) img.at(0, c, in_h / 2, in_w / 2) = 1.0f;

    Tensor4 t = stem_forward(img, m.stem);
    renorm(t);
    for (const auto* stage : {&m.l1, &m.l2, &m.l3})
        for (const BasicBlock& b : *stage) {
            t = basic_block_forward(t, b);
            renorm(t);
        }
    ModelSupport sup;
    sup.in_h = in_h;
    sup.in_w = in_w;
    sup.l3 = project_to_input(nonzero_box(t), 8, in_h, in_w);

    Tensor4 d = basic_block_forward(t, m.dp.b0);
    renorm(d);
    d = basic_block_forward(d, m.dp.b1);
    renorm(d);
    sup.dp2 = project_to_input(nonzero_box(d), 8, in_h, in_w);

    for (const auto* stage : {&m.l4, &m.l5})
        for (const BasicBlock& b : *stage) {
            t = basic_block_forward(t, b);
            renorm(t);
        }
    t = bottleneck_forward(t, m.l6);
    sup.l6 = project_to_input(nonzero_box(t), 64, in_h, in_w);
    return sup;
}

SupportBox impulse_support(const ModelConfig& cfg, RfPoint prefix, int in_h, int in_w) {
    const ModelSupport sup = impulse_support_all(cfg, in_h, in_w);
    switch (prefix) {
        case RfPoint::L3: return sup.l3;
        case RfPoint::Dp2: return sup.dp2;
        case RfPoint::L6: return sup.l6;
        default: throw ValueError("impulse_support: prefix must be one of L3, Dp2, L6");
    }
}

} // namespace sanet
