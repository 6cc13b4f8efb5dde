#include "sanet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sanet/threading.hpp"

namespace sanet {

int conv_out_extent(int in, int k, int stride, int pad, int dil) {
    if (stride <= 0 || dil <= 0 || k <= 0) throw ValueError("conv geometry: kernel/stride/dilation must be positive");
    if (pad < 0) throw ValueError("conv geometry: negative padding");
    const int span = dil * (k - 1) + 1;
    const int num = in + 2 * pad - span;
    if (num < 0) throw ShapeError("conv geometry: kernel span exceeds padded input");
    return num / stride + 1;
}

static void validate_conv(const Tensor4& x, const ConvParams& p) {
    if (p.weight.n <= 0 || p.weight.c <= 0 || p.weight.h <= 0 || p.weight.w <= 0)
        throw ShapeError("conv weight has empty dimension");
    if (x.c != p.weight.c)
        throw ShapeError("conv input channels " + std::to_string(x.c) + " != weight channels " + std::to_string(p.weight.c));
    if (!p.bias.empty() && static_cast<int>(p.bias.size()) != p.weight.n)
        throw ShapeError("conv bias size does not match output channels");
}

Tensor4 conv2d_reference(const Tensor4& x, const ConvParams& p) {
    validate_conv(x, p);
    const int kh = p.weight.h, kw = p.weight.w;
    const int oh = conv_out_extent(x.h, kh, p.sh, p.ph, p.dh);
    const int ow = conv_out_extent(x.w, kw, p.sw, p.pw, p.dw);
    Tensor4 out(x.n, p.weight.n, oh, ow);
    for (int ni = 0; ni < x.n; ++ni)
        for (int oc = 0; oc < p.weight.n; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = p.bias.empty() ? 0.0 : p.bias[oc];
                    for (int ci = 0; ci < x.c; ++ci)
                        for (int ky = 0; ky < kh; ++ky) {
                            const int iy = oy * p.sh - p.ph + ky * p.dh;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ix = ox * p.sw - p.pw + kx * p.dw;
                                if (ix < 0 || ix >= x.w) continue;
                                acc += static_cast<double>(p.weight.at(oc, ci, ky, kx)) * x.at(ni, ci, iy, ix);
                            }
                        }
                    out.at(ni, oc, oy, ox) = static_cast<float>(acc);
                }
    return out;
}

// Accumulate a pair of output channels against the shared patch matrix so
// each scratch row is read once for two outputs.
static void axpy_pair(const float* w0, const float* w1, const float* rows, int k_total,
                      int len, float* o0, float* o1) {
    if (o1) {
        for (int k = 0; k < k_total; ++k) {
            const float* r = rows + static_cast<size_t>(k) * len;
            const float a0 = w0[k], a1 = w1[k];
            for (int i = 0; i < len; ++i) {
                o0[i] += a0 * r[i];
                o1[i] += a1 * r[i];
            }
        }
    } else {
        for (int k = 0; k < k_total; ++k) {
            const float* r = rows + static_cast<size_t>(k) * len;
            const float a0 = w0[k];
            for (int i = 0; i < len; ++i) o0[i] += a0 * r[i];
        }
    }
}

static void clamp_nonneg(float* p, int len) {
    for (int i = 0; i < len; ++i) p[i] = p[i] > 0.0f ? p[i] : 0.0f;
}

static void conv2d_1x1_s1(const Tensor4& x, const ConvParams& p, Tensor4& out, bool fuse_relu) {
    const int oc_total = p.weight.n;
    const int pairs = (oc_total + 1) / 2;
    const int len = x.h * x.w;
    parallel_for(0, static_cast<int64_t>(x.n) * pairs, [&](int64_t lo, int64_t hi) {
        for (int64_t it = lo; it < hi; ++it) {
            const int ni = static_cast<int>(it / pairs);
            const int oc = static_cast<int>(it % pairs) * 2;
            const bool two = oc + 1 < oc_total;
            float* o0 = out.plane(ni, oc);
            float* o1 = two ? out.plane(ni, oc + 1) : nullptr;
            std::fill(o0, o0 + len, p.bias.empty() ? 0.0f : p.bias[oc]);
            if (two) std::fill(o1, o1 + len, p.bias.empty() ? 0.0f : p.bias[oc + 1]);
            const float* w0 = p.weight.data.data() + static_cast<size_t>(oc) * x.c;
            axpy_pair(w0, two ? w0 + x.c : nullptr, x.plane(ni, 0), x.c, len, o0, o1);
            if (fuse_relu) {
                clamp_nonneg(o0, len);
                if (two) clamp_nonneg(o1, len);
            }
        }
    });
}

Tensor4 conv2d(const Tensor4& x, const ConvParams& p, bool fuse_relu) {
    validate_conv(x, p);
    const int kh = p.weight.h, kw = p.weight.w;
    const int oh = conv_out_extent(x.h, kh, p.sh, p.ph, p.dh);
    const int ow = conv_out_extent(x.w, kw, p.sw, p.pw, p.dw);
    Tensor4 out(x.n, p.weight.n, oh, ow);
    if (out.size() == 0) return out;

    if (kh == 1 && kw == 1 && p.sh == 1 && p.sw == 1 && p.ph == 0 && p.pw == 0) {
        conv2d_1x1_s1(x, p, out, fuse_relu);
        return out;
    }

    const int k_total = x.c * kh * kw;
    int block = static_cast<int>((1u << 20) / (static_cast<size_t>(k_total) * ow));
    block = std::clamp(block, 1, oh);
    const int nblocks = (oh + block - 1) / block;
    const int oc_total = p.weight.n;

    parallel_for(0, static_cast<int64_t>(x.n) * nblocks, [&](int64_t lo, int64_t hi) {
        std::vector<float> scratch;
        for (int64_t it = lo; it < hi; ++it) {
            const int ni = static_cast<int>(it / nblocks);
            const int r0 = static_cast<int>(it % nblocks) * block;
            const int rows = std::min(block, oh - r0);
            const int len = rows * ow;
            scratch.assign(static_cast<size_t>(k_total) * len, 0.0f);

            for (int ci = 0; ci < x.c; ++ci) {
                const float* src = x.plane(ni, ci);
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        float* dst = scratch.data() + (static_cast<size_t>((ci * kh + ky) * kw + kx)) * len;
                        for (int r = 0; r < rows; ++r, dst += ow) {
                            const int iy = (r0 + r) * p.sh - p.ph + ky * p.dh;
                            if (iy < 0 || iy >= x.h) continue;
                            const float* in_row = src + static_cast<size_t>(iy) * x.w;
                            const int ix0 = -p.pw + kx * p.dw;
                            if (p.sw == 1) {
                                const int c0 = std::max(0, -ix0);
                                const int c1 = std::min(ow, x.w - ix0);
                                if (c1 > c0)
                                    std::memcpy(dst + c0, in_row + ix0 + c0, static_cast<size_t>(c1 - c0) * sizeof(float));
                            } else {
                                for (int col = 0; col < ow; ++col) {
                                    const int ix = ix0 + col * p.sw;
                                    if (ix >= 0 && ix < x.w) dst[col] = in_row[ix];
                                }
                            }
                        }
                    }
            }

            for (int oc = 0; oc < oc_total; oc += 2) {
                const bool two = oc + 1 < oc_total;
                float* o0 = out.plane(ni, oc) + static_cast<size_t>(r0) * ow;
                float* o1 = two ? out.plane(ni, oc + 1) + static_cast<size_t>(r0) * ow : nullptr;
                std::fill(o0, o0 + len, p.bias.empty() ? 0.0f : p.bias[oc]);
                if (two) std::fill(o1, o1 + len, p.bias.empty() ? 0.0f : p.bias[oc + 1]);
                const float* w0 = p.weight.data.data() + static_cast<size_t>(oc) * k_total;
                axpy_pair(w0, two ? w0 + k_total : nullptr, scratch.data(), k_total, len, o0, o1);
                if (fuse_relu) {
                    clamp_nonneg(o0, len);
                    if (two) clamp_nonneg(o1, len);
                }
            }
        }
    });
    return out;
}

static void validate_bn(const Tensor4& x, const BnParams& bn) {
    const size_t c = static_cast<size_t>(x.c);
    if (bn.gamma.size() != c || bn.beta.size() != c || bn.mean.size() != c || bn.var.size() != c)
        throw ShapeError("batch norm parameter size does not match channels");
}

Tensor4 batch_norm_infer(const Tensor4& x, const BnParams& bn) {
    Tensor4 out = x;
    detail::bn_inplace(out, bn);
    return out;
}

void fold_bn_into_conv(ConvParams& conv, const BnParams& bn) {
    const int oc = conv.weight.n;
    if (static_cast<int>(bn.gamma.size()) != oc)
        throw ShapeError("fold: batch norm channels do not match conv outputs");
    if (conv.bias.empty()) conv.bias.assign(oc, 0.0f);
    const size_t per_oc = static_cast<size_t>(conv.weight.c) * conv.weight.h * conv.weight.w;
    for (int o = 0; o < oc; ++o) {
        const double s = bn.gamma[o] / std::sqrt(static_cast<double>(bn.var[o]) + bn.eps);
        float* w = conv.weight.data.data() + o * per_oc;
        for (size_t i = 0; i < per_oc; ++i) w[i] = static_cast<float>(w[i] * s);
        conv.bias[o] = static_cast<float>((conv.bias[o] - bn.mean[o]) * s + bn.beta[o]);
    }
}

Tensor4 relu(const Tensor4& x) {
    Tensor4 out = x;
    detail::relu_inplace(out);
    return out;
}

Tensor4 sigmoid(const Tensor4& x) {
    Tensor4 out(x.n, x.c, x.h, x.w);
    for (size_t i = 0; i < x.data.size(); ++i) {
        const float v = x.data[i];
        if (v >= 0.0f) {
            out.data[i] = 1.0f / (1.0f + std::exp(-v));
        } else {
            const float e = std::exp(v);
            out.data[i] = e / (1.0f + e);
        }
    }
    return out;
}

Tensor4 avg_pool2d(const Tensor4& x, int kh, int kw, int sh, int sw, int ph, int pw,
                   bool count_includes_pad) {
    if (kh <= 0 || kw <= 0 || sh <= 0 || sw <= 0) throw ValueError("avg_pool2d: kernel and stride must be positive");
    if (ph < 0 || pw < 0) throw ValueError("avg_pool2d: negative padding");
    const int oh_num = x.h + 2 * ph - kh;
    const int ow_num = x.w + 2 * pw - kw;
    if (oh_num < 0 || ow_num < 0) throw ShapeError("avg_pool2d: window exceeds padded input");
    const int oh = oh_num / sh + 1;
    const int ow = ow_num / sw + 1;
    Tensor4 out(x.n, x.c, oh, ow);
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci) {
            const float* src = x.plane(ni, ci);
            float* dst = out.plane(ni, ci);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const int y0 = oy * sh - ph, x0 = ox * sw - pw;
                    double acc = 0.0;
                    int in_bounds = 0;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = y0 + ky;
                        if (iy < 0 || iy >= x.h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = x0 + kx;
                            if (ix < 0 || ix >= x.w) continue;
                            acc += src[static_cast<size_t>(iy) * x.w + ix];
                            ++in_bounds;
                        }
                    }
                    const int divisor = count_includes_pad ? kh * kw : in_bounds;
                    dst[oy * ow + ox] = divisor == 0 ? 0.0f : static_cast<float>(acc / divisor);
                }
        }
    return out;
}

Tensor4 adaptive_avg_pool2d(const Tensor4& x, int oh, int ow) {
    if (oh <= 0 || ow <= 0) throw ValueError("adaptive_avg_pool2d: output extent must be positive");
    if (x.h <= 0 || x.w <= 0) throw ShapeError("adaptive_avg_pool2d: empty input");
    if (oh > x.h || ow > x.w)
        throw ShapeError("adaptive_avg_pool2d: output " + std::to_string(oh) + "x" + std::to_string(ow) +
                         " exceeds input " + std::to_string(x.h) + "x" + std::to_string(x.w));
    Tensor4 out(x.n, x.c, oh, ow);
    auto bin_lo = [](int i, int in, int o) { return static_cast<int>((static_cast<int64_t>(i) * in) / o); };
    auto bin_hi = [](int i, int in, int o) {
        return static_cast<int>((static_cast<int64_t>(i + 1) * in + o - 1) / o);
    };
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci) {
            const float* src = x.plane(ni, ci);
            float* dst = out.plane(ni, ci);
            for (int oy = 0; oy < oh; ++oy) {
                const int y0 = bin_lo(oy, x.h, oh), y1 = bin_hi(oy, x.h, oh);
                for (int ox = 0; ox < ow; ++ox) {
                    const int x0 = bin_lo(ox, x.w, ow), x1 = bin_hi(ox, x.w, ow);
                    double acc = 0.0;
                    for (int iy = y0; iy < y1; ++iy)
                        for (int ix = x0; ix < x1; ++ix) acc += src[static_cast<size_t>(iy) * x.w + ix];
                    dst[oy * ow + ox] = static_cast<float>(acc / ((y1 - y0) * static_cast<double>(x1 - x0)));
                }
            }
        }
    return out;
}

namespace {
struct Lerp1D {
    std::vector<int> i0, i1;
    std::vector<float> f;
};

Lerp1D make_lerp(int in, int out) {
    Lerp1D l;
    l.i0.resize(out);
    l.i1.resize(out);
    l.f.resize(out);
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        double s = (i + 0.5) * scale - 0.5;
        if (s < 0.0) s = 0.0;
        int lo = static_cast<int>(s);
        if (lo > in - 1) lo = in - 1;
        l.i0[i] = lo;
        l.i1[i] = std::min(lo + 1, in - 1);
        l.f[i] = static_cast<float>(s - lo);
    }
    return l;
}
} // namespace

Tensor4 bilinear_resize(const Tensor4& x, int oh, int ow) {
    if (oh <= 0 || ow <= 0) throw ValueError("bilinear_resize: output extent must be positive");
    if (x.h <= 0 || x.w <= 0) throw ShapeError("bilinear_resize: empty input");
    Tensor4 out(x.n, x.c, oh, ow);
    const Lerp1D ly = make_lerp(x.h, oh);
    const Lerp1D lx = make_lerp(x.w, ow);
    parallel_for(0, static_cast<int64_t>(x.n) * x.c, [&](int64_t lo, int64_t hi) {
        for (int64_t pc = lo; pc < hi; ++pc) {
            const float* src = x.data.data() + static_cast<size_t>(pc) * x.h * x.w;
            float* dst = out.data.data() + static_cast<size_t>(pc) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                const float* r0 = src + static_cast<size_t>(ly.i0[oy]) * x.w;
                const float* r1 = src + static_cast<size_t>(ly.i1[oy]) * x.w;
                const float fy = ly.f[oy];
                for (int ox = 0; ox < ow; ++ox) {
                    const int c0 = lx.i0[ox], c1 = lx.i1[ox];
                    const float fx = lx.f[ox];
                    const float top = r0[c0] + fx * (r0[c1] - r0[c0]);
                    const float bot = r1[c0] + fx * (r1[c1] - r1[c0]);
                    dst[static_cast<size_t>(oy) * ow + ox] = top + fy * (bot - top);
                }
            }
        }
    });
    return out;
}

namespace detail {

void relu_inplace(Tensor4& x) {
    for (auto& v : x.data) v = v > 0.0f ? v : 0.0f;
}

void bn_inplace(Tensor4& x, const BnParams& bn) {
    validate_bn(x, bn);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci) {
            const double sd = bn.gamma[ci] / std::sqrt(static_cast<double>(bn.var[ci]) + bn.eps);
            const float s = static_cast<float>(sd);
            const float b = static_cast<float>(bn.beta[ci] - bn.mean[ci] * sd);
            float* p = x.plane(ni, ci);
            for (size_t i = 0; i < plane; ++i) p[i] = p[i] * s + b;
        }
}

void add_inplace(Tensor4& x, const Tensor4& y) {
    if (!x.same_shape(y))
        throw ShapeError("add_inplace: shape mismatch " + x.dims_str() + " vs " + y.dims_str());
    for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += y.data[i];
}

} // namespace detail

} // namespace sanet
