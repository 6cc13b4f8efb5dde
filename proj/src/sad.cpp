#include "sanet/sad.hpp"

#include <cmath>

namespace sanet {

namespace {

void check_inputs(const Tensor4& x, const Tensor4& dp1, const Tensor4& dp2, const Tensor4& y_up,
                  const SadWeights& w) {
    if (!x.same_shape(dp1) || !x.same_shape(dp2) || !x.same_shape(y_up))
        throw ShapeError("sad: inputs disagree: " + x.dims_str() + ", " + dp1.dims_str() + ", " +
                         dp2.dims_str() + ", " + y_up.dims_str());
    if (w.att_h.weight.c != x.c || w.att_h.weight.n != x.c || w.att_v.weight.c != x.c ||
        w.att_v.weight.n != x.c || w.out.weight.c != x.c)
        throw ShapeError("sad: weight channels do not match inputs");
}

// Scatter form of the transposed correlation, accumulated in double.
Tensor4 conv_bwd_input(const Tensor4& grad_out, const ConvParams& p, int in_h, int in_w) {
    std::vector<double> acc(static_cast<size_t>(grad_out.n) * p.weight.c * in_h * in_w, 0.0);
    for (int ni = 0; ni < grad_out.n; ++ni)
        for (int oc = 0; oc < grad_out.c; ++oc)
            for (int oy = 0; oy < grad_out.h; ++oy)
                for (int ox = 0; ox < grad_out.w; ++ox) {
                    const double g = grad_out.at(ni, oc, oy, ox);
                    for (int ci = 0; ci < p.weight.c; ++ci)
                        for (int ky = 0; ky < p.weight.h; ++ky) {
                            const int iy = oy * p.sh - p.ph + ky * p.dh;
                            if (iy < 0 || iy >= in_h) continue;
                            for (int kx = 0; kx < p.weight.w; ++kx) {
                                const int ix = ox * p.sw - p.pw + kx * p.dw;
                                if (ix < 0 || ix >= in_w) continue;
                                acc[((static_cast<size_t>(ni) * p.weight.c + ci) * in_h + iy) * in_w + ix] +=
                                    g * p.weight.at(oc, ci, ky, kx);
                            }
                        }
                }
    Tensor4 out(grad_out.n, p.weight.c, in_h, in_w);
    for (size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i]);
    return out;
}

Tensor4 conv_bwd_weight(const Tensor4& x, const Tensor4& grad_out, const ConvParams& p) {
    std::vector<double> acc(p.weight.size(), 0.0);
    for (int ni = 0; ni < grad_out.n; ++ni)
        for (int oc = 0; oc < grad_out.c; ++oc)
            for (int oy = 0; oy < grad_out.h; ++oy)
                for (int ox = 0; ox < grad_out.w; ++ox) {
                    const double g = grad_out.at(ni, oc, oy, ox);
                    for (int ci = 0; ci < p.weight.c; ++ci)
                        for (int ky = 0; ky < p.weight.h; ++ky) {
                            const int iy = oy * p.sh - p.ph + ky * p.dh;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < p.weight.w; ++kx) {
                                const int ix = ox * p.sw - p.pw + kx * p.dw;
                                if (ix < 0 || ix >= x.w) continue;
                                acc[((static_cast<size_t>(oc) * p.weight.c + ci) * p.weight.h + ky) * p.weight.w +
                                    kx] += g * x.at(ni, ci, iy, ix);
                            }
                        }
                }
    Tensor4 out(p.weight.n, p.weight.c, p.weight.h, p.weight.w);
    for (size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i]);
    return out;
}

std::vector<float> conv_bwd_bias(const Tensor4& grad_out) {
    std::vector<float> b(grad_out.c, 0.0f);
    for (int oc = 0; oc < grad_out.c; ++oc) {
        double acc = 0.0;
        for (int ni = 0; ni < grad_out.n; ++ni) {
            const float* p = grad_out.plane(ni, oc);
            const size_t plane = static_cast<size_t>(grad_out.h) * grad_out.w;
            for (size_t i = 0; i < plane; ++i) acc += p[i];
        }
        b[oc] = static_cast<float>(acc);
    }
    return b;
}

std::vector<double> to_f64(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

} // namespace

Tensor4 sad_forward(const Tensor4& x, const Tensor4& dp1, const Tensor4& dp2, const Tensor4& y_up,
                    const SadWeights& w, SadCache* cache) {
    check_inputs(x, dp1, dp2, y_up, w);
    Tensor4 dp_sum = add(dp1, dp2);
    Tensor4 z1 = conv2d(dp_sum, w.att_h);
    Tensor4 z2 = conv2d(dp_sum, w.att_v);
    Tensor4 a1 = sigmoid(z1);
    Tensor4 a2 = sigmoid(z2);
    Tensor4 a = add(a1, a2);
    Tensor4 fused = mul(x, add_scalar(a, 1.0f));
    detail::add_inplace(fused, mul(y_up, sub(Tensor4(a.n, a.c, a.h, a.w, 2.0f), a)));
    Tensor4 out = conv2d(fused, w.out);
    if (cache) {
        cache->x = x;
        cache->y = y_up;
        cache->dp_sum = std::move(dp_sum);
        cache->z1 = std::move(z1);
        cache->z2 = std::move(z2);
        cache->a1 = std::move(a1);
        cache->a2 = std::move(a2);
        cache->a = std::move(a);
        cache->fused = std::move(fused);
    }
    return out;
}

SadGrads sad_backward(const SadCache& cache, const Tensor4& grad_out, const SadWeights& w) {
    if (grad_out.n != cache.fused.n || grad_out.c != w.out.weight.n || grad_out.h != cache.fused.h ||
        grad_out.w != cache.fused.w)
        throw ShapeError("sad backward: grad shape " + grad_out.dims_str() + " does not match cache");
    SadGrads g;
    Tensor4 g_fused = conv_bwd_input(grad_out, w.out, cache.fused.h, cache.fused.w);
    g.out_w = conv_bwd_weight(cache.fused, grad_out, w.out);
    g.out_b = conv_bwd_bias(grad_out);

    g.x = mul(g_fused, add_scalar(cache.a, 1.0f));
    g.y = mul(g_fused, sub(Tensor4(cache.a.n, cache.a.c, cache.a.h, cache.a.w, 2.0f), cache.a));
    Tensor4 g_a = mul(g_fused, sub(cache.x, cache.y));

    Tensor4 ones(cache.a1.n, cache.a1.c, cache.a1.h, cache.a1.w, 1.0f);
    Tensor4 g_z1 = mul(g_a, mul(cache.a1, sub(ones, cache.a1)));
    Tensor4 g_z2 = mul(g_a, mul(cache.a2, sub(ones, cache.a2)));

    g.dp1 = conv_bwd_input(g_z1, w.att_h, cache.dp_sum.h, cache.dp_sum.w);
    detail::add_inplace(g.dp1, conv_bwd_input(g_z2, w.att_v, cache.dp_sum.h, cache.dp_sum.w));
    g.dp2 = g.dp1;

    g.att_h_w = conv_bwd_weight(cache.dp_sum, g_z1, w.att_h);
    g.att_h_b = conv_bwd_bias(g_z1);
    g.att_v_w = conv_bwd_weight(cache.dp_sum, g_z2, w.att_v);
    g.att_v_b = conv_bwd_bias(g_z2);
    return g;
}

std::vector<std::vector<double>> sad_pack_f64(const Tensor4& x, const Tensor4& dp1, const Tensor4& dp2,
                                              const Tensor4& y_up, const SadWeights& w) {
    return {to_f64(x.data),           to_f64(dp1.data),        to_f64(dp2.data),
            to_f64(y_up.data),        to_f64(w.att_h.weight.data), to_f64(w.att_h.bias),
            to_f64(w.att_v.weight.data), to_f64(w.att_v.bias), to_f64(w.out.weight.data),
            to_f64(w.out.bias)};
}

std::vector<std::vector<double>> sad_pack_grads_f64(const SadGrads& g) {
    return {to_f64(g.x.data),       to_f64(g.dp1.data),   to_f64(g.dp2.data), to_f64(g.y.data),
            to_f64(g.att_h_w.data), to_f64(g.att_h_b),    to_f64(g.att_v_w.data),
            to_f64(g.att_v_b),      to_f64(g.out_w.data), to_f64(g.out_b)};
}

std::vector<std::string> sad_param_names() {
    return {"x", "dp1", "dp2", "y", "att_h.w", "att_h.b", "att_v.w", "att_v.b", "out.w", "out.b"};
}

double sad_eval_sum_f64(const std::vector<std::vector<double>>& params, int n, int c, int h, int w) {
    if (params.size() != 10) throw ValueError("sad eval: expected 10 parameter tensors");
    const std::vector<double>& x = params[0];
    const std::vector<double>& dp1 = params[1];
    const std::vector<double>& dp2 = params[2];
    const std::vector<double>& y = params[3];
    const std::vector<double>& wh = params[4];
    const std::vector<double>& bh = params[5];
    const std::vector<double>& wv = params[6];
    const std::vector<double>& bv = params[7];
    const std::vector<double>& wo = params[8];
    const std::vector<double>& bo = params[9];

    const size_t plane = static_cast<size_t>(h) * w;
    const size_t chw = static_cast<size_t>(c) * plane;
    auto at = [&](const std::vector<double>& t, int ni, int ci, int yy, int xx) {
        return t[ni * chw + ci * plane + static_cast<size_t>(yy) * w + xx];
    };
    auto sigm = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };

    std::vector<double> dp_sum(dp1.size());
    for (size_t i = 0; i < dp_sum.size(); ++i) dp_sum[i] = dp1[i] + dp2[i];

    std::vector<double> fused(x.size());
    for (int ni = 0; ni < n; ++ni)
        for (int oc = 0; oc < c; ++oc)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    double z1 = bh[oc], z2 = bv[oc];
                    for (int ci = 0; ci < c; ++ci) {
                        for (int k = 0; k < 3; ++k) {
                            const int ix = xx - 1 + k;
                            if (ix >= 0 && ix < w)
                                z1 += wh[(static_cast<size_t>(oc) * c + ci) * 3 + k] * at(dp_sum, ni, ci, yy, ix);
                            const int iy = yy - 1 + k;
                            if (iy >= 0 && iy < h)
                                z2 += wv[(static_cast<size_t>(oc) * c + ci) * 3 + k] * at(dp_sum, ni, ci, iy, xx);
                        }
                    }
                    const double a = sigm(z1) + sigm(z2);
                    fused[ni * chw + oc * plane + static_cast<size_t>(yy) * w + xx] =
                        at(x, ni, oc, yy, xx) * (1.0 + a) + at(y, ni, oc, yy, xx) * (2.0 - a);
                }

    double total = 0.0;
    for (int ni = 0; ni < n; ++ni)
        for (int oc = 0; oc < c; ++oc) {
            double ch_sum = 0.0;
            for (size_t p = 0; p < plane; ++p) {
                double v = bo[oc];
                for (int ci = 0; ci < c; ++ci)
                    v += wo[static_cast<size_t>(oc) * c + ci] * fused[ni * chw + ci * plane + p];
                ch_sum += v;
            }
            total += ch_sum;
        }
    return total;
}

} // namespace sanet
