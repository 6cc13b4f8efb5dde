#include "sanet/model.hpp"

#include <cmath>
#include <sstream>

#include "sanet/rf.hpp"
#include "sanet/rng.hpp"

namespace sanet {

namespace {

// Single description of every parameter tensor. init_weights, build and the
// surrogate factory all walk the same code path, so names and shapes can
// never drift apart.
class ParamVisitor {
public:
    virtual ~ParamVisitor() = default;
    virtual ConvParams conv(const std::string& name, int out_c, int in_c, int kh, int kw, int sh, int sw,
                            int ph, int pw, int dh, int dw, bool bias) = 0;
    virtual BnParams bn(const std::string& name, int c, bool branch_final) = 0;
};

class InitVisitor : public ParamVisitor {
public:
    explicit InitVisitor(uint64_t seed) : seed_(seed) {}

    ConvParams conv(const std::string& name, int out_c, int in_c, int kh, int kw, int sh, int sw, int ph,
                    int pw, int dh, int dw, bool bias) override {
        ConvParams p;
        p.weight = Tensor4(out_c, in_c, kh, kw);
        const double bound = std::sqrt(6.0 / (static_cast<double>(in_c) * kh * kw));
        SplitMix64 rng(splitmix64_mix(seed_ ^ fnv1a64(name + ".w")));
        for (float& v : p.weight.data) v = static_cast<float>(rng.uniform_in(-bound, bound));
        store.put(name + ".w", TensorRecord{{static_cast<uint32_t>(out_c), static_cast<uint32_t>(in_c),
                                             static_cast<uint32_t>(kh), static_cast<uint32_t>(kw)},
                                            p.weight.data});
        if (bias) {
            p.bias.assign(out_c, 0.0f);
            store.put(name + ".b", TensorRecord{{static_cast<uint32_t>(out_c)}, p.bias});
        }
        p.sh = sh; p.sw = sw; p.ph = ph; p.pw = pw; p.dh = dh; p.dw = dw;
        return p;
    }

    // Residual-branch-final norms start damped so stacked blocks keep unit-scale
    // activations at init; otherwise variance doubles per block.
    BnParams bn(const std::string& name, int c, bool branch_final) override {
        BnParams b;
        b.gamma.assign(c, branch_final ? 0.25f : 1.0f);
        b.beta.assign(c, 0.0f);
        b.mean.assign(c, 0.0f);
        b.var.assign(c, 1.0f);
        const std::vector<uint32_t> dims{static_cast<uint32_t>(c)};
        store.put(name + ".bn.gamma", TensorRecord{dims, b.gamma});
        store.put(name + ".bn.beta", TensorRecord{dims, b.beta});
        store.put(name + ".bn.mean", TensorRecord{dims, b.mean});
        store.put(name + ".bn.var", TensorRecord{dims, b.var});
        return b;
    }

    WeightStore store;

private:
    uint64_t seed_;
};

class LoadVisitor : public ParamVisitor {
public:
    explicit LoadVisitor(const WeightStore& store) : store_(store) {}

    ConvParams conv(const std::string& name, int out_c, int in_c, int kh, int kw, int sh, int sw, int ph,
                    int pw, int dh, int dw, bool bias) override {
        ConvParams p;
        p.weight = fetch4(name + ".w", out_c, in_c, kh, kw);
        if (bias) p.bias = fetch1(name + ".b", out_c);
        p.sh = sh; p.sw = sw; p.ph = ph; p.pw = pw; p.dh = dh; p.dw = dw;
        return p;
    }

    BnParams bn(const std::string& name, int c, bool) override {
        BnParams b;
        b.gamma = fetch1(name + ".bn.gamma", c);
        b.beta = fetch1(name + ".bn.beta", c);
        b.mean = fetch1(name + ".bn.mean", c);
        b.var = fetch1(name + ".bn.var", c);
        return b;
    }

private:
    static std::string dims_of(const std::vector<uint32_t>& dims) {
        std::string s;
        for (size_t i = 0; i < dims.size(); ++i) s += (i ? "x" : "") + std::to_string(dims[i]);
        return s;
    }

    Tensor4 fetch4(const std::string& name, int d0, int d1, int d2, int d3) {
        const TensorRecord& rec = store_.get(name);
        const std::vector<uint32_t> want{static_cast<uint32_t>(d0), static_cast<uint32_t>(d1),
                                         static_cast<uint32_t>(d2), static_cast<uint32_t>(d3)};
        if (rec.dims != want)
            throw ShapeError("build: tensor " + name + " has dims " + dims_of(rec.dims) + ", expected " +
                             dims_of(want));
        Tensor4 t(d0, d1, d2, d3);
        t.data = rec.data;
        return t;
    }

    std::vector<float> fetch1(const std::string& name, int d0) {
        const TensorRecord& rec = store_.get(name);
        if (rec.dims != std::vector<uint32_t>{static_cast<uint32_t>(d0)})
            throw ShapeError("build: tensor " + name + " has dims " + dims_of(rec.dims) + ", expected " +
                             std::to_string(d0));
        return rec.data;
    }

    const WeightStore& store_;
};

class SurrogateVisitor : public ParamVisitor {
public:
    explicit SurrogateVisitor(float value) : value_(value) {}

    ConvParams conv(const std::string&, int out_c, int in_c, int kh, int kw, int sh, int sw, int ph, int pw,
                    int dh, int dw, bool bias) override {
        ConvParams p;
        p.weight = Tensor4(out_c, in_c, kh, kw, value_);
        if (bias) p.bias.assign(out_c, 0.0f);
        p.sh = sh; p.sw = sw; p.ph = ph; p.pw = pw; p.dh = dh; p.dw = dw;
        return p;
    }

    BnParams bn(const std::string&, int c, bool) override {
        BnParams b;
        b.gamma.assign(c, 1.0f);
        b.beta.assign(c, 0.0f);
        b.mean.assign(c, 0.0f);
        b.var.assign(c, 1.0f);
        return b;
    }

private:
    float value_;
};

ConvUnit make_unit(ParamVisitor& v, const std::string& name, int out_c, int in_c, int kh, int kw, int sh,
                   int sw, int ph, int pw, int dh, int dw, bool relu, bool branch_final = false) {
    ConvUnit u;
    u.conv = v.conv(name, out_c, in_c, kh, kw, sh, sw, ph, pw, dh, dw, /*bias=*/false);
    u.bn = v.bn(name, out_c, branch_final);
    u.relu = relu;
    return u;
}

ConvUnit make_bare_conv(ParamVisitor& v, const std::string& name, int out_c, int in_c, int kh, int kw,
                        int ph, int pw) {
    ConvUnit u;
    u.conv = v.conv(name, out_c, in_c, kh, kw, 1, 1, ph, pw, 1, 1, /*bias=*/true);
    u.has_bn = false;
    u.relu = false;
    return u;
}

BasicBlock make_basic(ParamVisitor& v, const std::string& base, int in_c, int out_c, int stride, int dil) {
    BasicBlock b;
    b.c1 = make_unit(v, base + ".c1", out_c, in_c, 3, 3, stride, stride, dil, dil, dil, dil, true);
    b.c2 = make_unit(v, base + ".c2", out_c, out_c, 3, 3, 1, 1, dil, dil, dil, dil, false, true);
    if (stride != 1 || in_c != out_c)
        b.proj = make_unit(v, base + ".proj", out_c, in_c, 1, 1, stride, stride, 0, 0, 1, 1, false);
    return b;
}

std::vector<BasicBlock> make_stage(ParamVisitor& v, const std::string& base, int in_c, int out_c, int stride,
                                   int repeats) {
    std::vector<BasicBlock> blocks;
    blocks.reserve(static_cast<size_t>(repeats));
    for (int i = 0; i < repeats; ++i)
        blocks.push_back(make_basic(v, base + ".b" + std::to_string(i), i == 0 ? in_c : out_c, out_c,
                                    i == 0 ? stride : 1, 1));
    return blocks;
}

Model assemble(const ModelConfig& cfg, ParamVisitor& v) {
    validate_apppm_config(cfg.apppm);
    Model m;
    m.cfg = cfg;
    const auto& ch = cfg.channels;

    m.stem.c1 = make_unit(v, "stem.c1", ch[0], 3, 3, 3, 2, 2, 1, 1, 1, 1, true);
    m.stem.c2 = make_unit(v, "stem.c2", ch[0], ch[0], 3, 3, 2, 2, 1, 1, 1, 1, true);

    m.l1 = make_stage(v, "l1", ch[0], ch[1], 1, cfg.repeats[1]);
    m.l2 = make_stage(v, "l2", ch[1], ch[2], 2, cfg.repeats[2]);
    m.l3 = make_stage(v, "l3", ch[2], ch[3], 1, cfg.repeats[3]);
    m.l4 = make_stage(v, "l4", ch[3], ch[4], 2, cfg.repeats[4]);
    m.l5 = make_stage(v, "l5", ch[4], ch[5], 2, cfg.repeats[5]);

    const int mid6 = ch[5];
    m.l6.c1 = make_unit(v, "l6.b0.c1", mid6, ch[5], 1, 1, 1, 1, 0, 0, 1, 1, true);
    m.l6.c2 = make_unit(v, "l6.b0.c2", mid6, mid6, 3, 3, 2, 2, 1, 1, 1, 1, true);
    m.l6.c3 = make_unit(v, "l6.b0.c3", ch[6], mid6, 1, 1, 1, 1, 0, 0, 1, 1, false, true);
    m.l6.proj = make_unit(v, "l6.b0.proj", ch[6], ch[5], 1, 1, 2, 2, 0, 0, 1, 1, false);

    const int dc = cfg.decoder_c;
    m.dp.b0 = make_basic(v, "dp.b0", ch[3], dc, 1, cfg.dp_dil1);
    m.dp.b1 = make_basic(v, "dp.b1", dc, dc, 1, cfg.dp_dil2);
    m.dp.out = make_unit(v, "dp.out", dc, dc, 3, 3, 1, 1, 1, 1, 1, 1, true);

    const ApppmConfig& ac = cfg.apppm;
    m.apppm.cfg = ac;
    for (size_t i = 0; i < ac.grids.size(); ++i) {
        const std::string name = "apppm.s" + std::to_string(i);
        if (ac.grids[i].is_global())
            m.apppm.scale.push_back(make_unit(v, name, ac.branch_c, ac.in_c, 1, 1, 1, 1, 0, 0, 1, 1, true));
        else
            m.apppm.scale.push_back(make_unit(v, name, ac.branch_c, ac.in_c, 3, 3, 1, 1, 1, 1, 1, 1, true));
    }
    m.apppm.res = make_unit(v, "apppm.res", ac.branch_c, ac.in_c, 1, 1, 1, 1, 0, 0, 1, 1, false);
    m.apppm.fuse = make_unit(v, "apppm.fuse", ac.branch_c, ac.branch_c * static_cast<int>(ac.grids.size()),
                             3, 3, 1, 1, 1, 1, 1, 1, true);
    m.apppm.att_h = make_bare_conv(v, "apppm.att_h", ac.branch_c, ac.branch_c, 1, 3, 0, 1);
    m.apppm.att_v = make_bare_conv(v, "apppm.att_v", ac.branch_c, ac.branch_c, 3, 1, 1, 0);
    m.apppm.out = make_bare_conv(v, "apppm.out", ac.out_c, ac.branch_c, 1, 1, 0, 0);

    m.sad.att_h = v.conv("sad.att_h", dc, dc, 1, 3, 1, 1, 0, 1, 1, 1, true);
    m.sad.att_v = v.conv("sad.att_v", dc, dc, 3, 1, 1, 1, 1, 0, 1, 1, true);
    m.sad.out = v.conv("sad.out", dc, dc, 1, 1, 1, 1, 0, 0, 1, 1, true);

    m.head.c1 = make_unit(v, "head.c1", cfg.head_mid, dc, 3, 3, 1, 1, 1, 1, 1, 1, true);
    m.head.out = make_bare_conv(v, "head.out", cfg.num_classes, cfg.head_mid, 1, 1, 0, 0);
    m.aux_head.c1 = make_unit(v, "aux.c1", cfg.aux_mid, ch[4], 3, 3, 1, 1, 1, 1, 1, 1, true);
    m.aux_head.out = make_bare_conv(v, "aux.out", cfg.num_classes, cfg.aux_mid, 1, 1, 0, 0);
    m.boundary_head.c1 = make_unit(v, "bnd.c1", cfg.boundary_mid, dc, 3, 3, 1, 1, 1, 1, 1, 1, true);
    m.boundary_head.out = make_bare_conv(v, "bnd.out", 1, cfg.boundary_mid, 1, 1, 0, 0);
    return m;
}

void fold_block(BasicBlock& b) {
    fold_unit(b.c1);
    fold_unit(b.c2);
    if (b.proj) fold_unit(*b.proj);
}

struct EncoderTaps {
    Tensor4 l4_out;
    DpTaps dp;
    Tensor4 decoder_out;
};

EncoderTaps run_net(const Model& m, const Tensor4& img) {
    if (img.c != 3) throw ShapeError("forward: expected 3 input channels, got " + img.dims_str());
    if (img.h < 64 || img.w < 64)
        throw ShapeError("forward: image too small: " + img.dims_str() + " (need at least 64x64)");
    Tensor4 t = stem_forward(img, m.stem);
    for (const BasicBlock& b : m.l1) t = basic_block_forward(t, b);
    for (const BasicBlock& b : m.l2) t = basic_block_forward(t, b);
    for (const BasicBlock& b : m.l3) t = basic_block_forward(t, b);

    EncoderTaps taps;
    taps.dp = dilated_path_forward(t, m.dp);

    for (const BasicBlock& b : m.l4) t = basic_block_forward(t, b);
    taps.l4_out = t;
    for (const BasicBlock& b : m.l5) t = basic_block_forward(t, b);
    t = bottleneck_forward(t, m.l6);

    Tensor4 y = apppm_forward(t, m.apppm);
    y = bilinear_resize(y, taps.dp.x.h, taps.dp.x.w);
    taps.decoder_out = sad_forward(taps.dp.x, taps.dp.dp1, taps.dp.dp2, y, m.sad);
    return taps;
}

} // namespace

ModelConfig make_config(char variant, int num_classes) {
    ModelConfig cfg;
    const char v = static_cast<char>(std::toupper(static_cast<unsigned char>(variant)));
    if (v != 'S' && v != 'M') throw ValueError(std::string("unknown model variant: ") + variant);
    cfg.variant = v;
    cfg.repeats = v == 'S' ? std::array<int, 7>{1, 2, 2, 2, 2, 2, 1} : std::array<int, 7>{1, 3, 3, 3, 9, 3, 1};
    if (num_classes < 2) throw ValueError("num_classes must be at least 2");
    cfg.num_classes = num_classes;
    return cfg;
}

ModelConfig config_from_store(const WeightStore& store) {
    if (!store.contains("head.out.w")) throw FormatError("weight store is missing head.out.w");
    const TensorRecord& head = store.get("head.out.w");
    if (head.dims.size() != 4) throw FormatError("head.out.w is not a conv weight");
    const char variant = store.contains("l4.b2.c1.w") ? 'M' : 'S';
    return make_config(variant, static_cast<int>(head.dims[0]));
}

WeightStore init_weights(const ModelConfig& cfg, uint64_t seed) {
    InitVisitor v(seed);
    assemble(cfg, v);
    return std::move(v.store);
}

Model build(const ModelConfig& cfg, const WeightStore& store) {
    LoadVisitor v(store);
    return assemble(cfg, v);
}

Model build_surrogate(const ModelConfig& cfg, float weight_value) {
    SurrogateVisitor v(weight_value);
    return assemble(cfg, v);
}

void fold_model(Model& m) {
    fold_unit(m.stem.c1);
    fold_unit(m.stem.c2);
    for (auto* stage : {&m.l1, &m.l2, &m.l3, &m.l4, &m.l5})
        for (BasicBlock& b : *stage) fold_block(b);
    fold_unit(m.l6.c1);
    fold_unit(m.l6.c2);
    fold_unit(m.l6.c3);
    fold_unit(m.l6.proj);
    fold_block(m.dp.b0);
    fold_block(m.dp.b1);
    fold_unit(m.dp.out);
    for (ConvUnit& u : m.apppm.scale) fold_unit(u);
    fold_unit(m.apppm.res);
    fold_unit(m.apppm.fuse);
    fold_unit(m.head.c1);
    fold_unit(m.aux_head.c1);
    fold_unit(m.boundary_head.c1);
}

Tensor4 forward(const Model& m, const Tensor4& img) {
    EncoderTaps taps = run_net(m, img);
    return head_forward(taps.decoder_out, m.head, img.h, img.w);
}

TrainOutputs forward_train(const Model& m, const Tensor4& img) {
    EncoderTaps taps = run_net(m, img);
    TrainOutputs out;
    out.main = head_forward(taps.decoder_out, m.head, img.h, img.w);
    out.aux = head_forward(taps.l4_out, m.aux_head, img.h, img.w);
    out.boundary = head_forward(taps.dp.x, m.boundary_head, img.h, img.w);
    return out;
}

Tensor4 multi_scale_infer(const Model& m, const Tensor4& img, const std::vector<double>& scales) {
    if (scales.empty()) throw ValueError("multi_scale_infer: empty scale list");
    Tensor4 acc;
    for (double s : scales) {
        if (s <= 0.0) throw ValueError("multi_scale_infer: scales must be positive");
        const int sh = static_cast<int>(std::lround(img.h * s));
        const int sw = static_cast<int>(std::lround(img.w * s));
        Tensor4 scaled = (sh == img.h && sw == img.w) ? img : bilinear_resize(img, sh, sw);
        Tensor4 prob = softmax_channels(forward(m, scaled));
        if (prob.h != img.h || prob.w != img.w) prob = bilinear_resize(prob, img.h, img.w);
        if (acc.size() == 0)
            acc = std::move(prob);
        else
            detail::add_inplace(acc, prob);
    }
    return mul_scalar(acc, 1.0f / static_cast<float>(scales.size()));
}

LayerReport describe(const ModelConfig& cfg, const WeightStore& store, int in_h, int in_w) {
    LayerReport rep;
    auto down = [](int n) { return conv_out_extent(n, 3, 2, 1, 1); };
    const int h4 = down(down(in_h)), w4 = down(down(in_w));
    const int h8 = down(h4), w8 = down(w4);
    const int h16 = down(h8), w16 = down(w8);
    const int h32 = down(h16), w32 = down(w16);
    const int h64 = down(h32), w64 = down(w32);

    auto rf_at = [&](RfPoint p) { return receptive_field(model_rf_chain(cfg, p)).first; };
    auto add_stage = [&](const std::string& name, const std::string& prefix, int c, int h, int w, int red,
                         int rf) {
        rep.stages.push_back({name, c, h, w, red, store.value_count_prefix(prefix), rf});
    };
    const auto& ch = cfg.channels;
    add_stage("stem", "stem.", ch[0], h4, w4, 4, rf_at(RfPoint::Stem));
    add_stage("l1", "l1.", ch[1], h4, w4, 4, rf_at(RfPoint::L1));
    add_stage("l2", "l2.", ch[2], h8, w8, 8, rf_at(RfPoint::L2));
    add_stage("l3", "l3.", ch[3], h8, w8, 8, rf_at(RfPoint::L3));
    add_stage("dp", "dp.", cfg.decoder_c, h8, w8, 8, rf_at(RfPoint::DpOut));
    add_stage("l4", "l4.", ch[4], h16, w16, 16, rf_at(RfPoint::L4));
    add_stage("l5", "l5.", ch[5], h32, w32, 32, rf_at(RfPoint::L5));
    add_stage("l6", "l6.", ch[6], h64, w64, 64, rf_at(RfPoint::L6));
    add_stage("apppm", "apppm.", cfg.apppm.out_c, h64, w64, 64, -1);
    add_stage("sad", "sad.", cfg.decoder_c, h8, w8, 8, -1);
    add_stage("head", "head.", cfg.num_classes, in_h, in_w, 1, -1);
    add_stage("aux", "aux.", cfg.num_classes, in_h, in_w, 1, -1);
    add_stage("bnd", "bnd.", 1, in_h, in_w, 1, -1);
    rep.total_params = store.value_count();
    return rep;
}

std::string format_report(const LayerReport& rep) {
    std::ostringstream os;
    os << "stage      output          reduction  params      rf\n";
    for (const StageRecord& s : rep.stages) {
        std::ostringstream dims;
        dims << s.c << "x" << s.h << "x" << s.w;
        os << s.name;
        for (size_t i = s.name.size(); i < 11; ++i) os << ' ';
        os << dims.str();
        for (size_t i = dims.str().size(); i < 16; ++i) os << ' ';
        std::string red = "/" + std::to_string(s.reduction);
        os << red;
        for (size_t i = red.size(); i < 11; ++i) os << ' ';
        std::string params = std::to_string(s.params);
        os << params;
        for (size_t i = params.size(); i < 12; ++i) os << ' ';
        os << (s.rf > 0 ? std::to_string(s.rf) : "-") << "\n";
    }
    os << "total params: " << rep.total_params << "\n";
    return os.str();
}

} // namespace sanet
