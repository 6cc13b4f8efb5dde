#include "sanet/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "sanet/kernels.hpp"
#include "sanet/rng.hpp"
#include "sanet/tensor.hpp"

namespace sanet {
namespace {

void fill_uniform(Tensor4& t, SplitMix64& rng, float lo, float hi) {
    for (float& v : t.data) v = rng.uniform_in(lo, hi);
}

void fill_uniform(std::vector<float>& t, SplitMix64& rng, float lo, float hi) {
    for (float& v : t) v = rng.uniform_in(lo, hi);
}

// worst elementwise difference scaled by the largest reference magnitude
double normwise_err(const Tensor4& got, const Tensor4& want) {
    if (!got.same_shape(want)) return 1e30;
    double maxd = 0.0, maxv = 0.0;
    for (size_t i = 0; i < got.data.size(); ++i) {
        maxd = std::max(maxd, std::abs(static_cast<double>(got.data[i]) - want.data[i]));
        maxv = std::max(maxv, std::abs(static_cast<double>(want.data[i])));
    }
    return maxd / std::max(1e-6, maxv);
}

double max_abs_err(const Tensor4& got, const Tensor4& want) {
    if (!got.same_shape(want)) return 1e30;
    double maxd = 0.0;
    for (size_t i = 0; i < got.data.size(); ++i)
        maxd = std::max(maxd, std::abs(static_cast<double>(got.data[i]) - want.data[i]));
    return maxd;
}

void run_suite(SelftestResult& r, const std::string& name, int cases, double tol, uint64_t seed,
               const std::function<double(SplitMix64&)>& one_case) {
    SplitMix64 rng(splitmix64_mix(seed ^ fnv1a64(name)));
    double worst = 0.0;
    for (int i = 0; i < cases; ++i) worst = std::max(worst, one_case(rng));
    ++r.suites;
    const bool pass = worst <= tol;
    if (!pass) ++r.failed;
    std::ostringstream os;
    os << (pass ? "ok   " : "FAIL ") << name << ": " << cases << " cases, max err " << std::scientific
       << std::setprecision(2) << worst << " (tol " << tol << ")";
    r.lines.push_back(os.str());
}

double conv_case(SplitMix64& rng) {
    static const int ks[] = {1, 2, 3, 5};
    static const int dils[] = {1, 2, 4};
    const int kh = ks[rng.next() % 4], kw = ks[rng.next() % 4];
    const int dh = kh == 1 ? 1 : dils[rng.next() % 3];
    const int dw = kw == 1 ? 1 : dils[rng.next() % 3];
    const int sh = 1 + static_cast<int>(rng.next() % 3);
    const int sw = 1 + static_cast<int>(rng.next() % 3);
    const int ph = static_cast<int>(rng.next() % 3), pw = static_cast<int>(rng.next() % 3);
    const int eff_h = dh * (kh - 1) + 1, eff_w = dw * (kw - 1) + 1;
    const int h = eff_h + static_cast<int>(rng.next() % 6);
    const int w = eff_w + static_cast<int>(rng.next() % 6);
    const int cin = 1 + static_cast<int>(rng.next() % 4);
    const int cout = 1 + static_cast<int>(rng.next() % 5);
    const int n = 1 + static_cast<int>(rng.next() % 2);

    Tensor4 x(n, cin, h, w);
    fill_uniform(x, rng, -1.0f, 1.0f);
    ConvParams p;
    p.weight = Tensor4(cout, cin, kh, kw);
    fill_uniform(p.weight, rng, -1.0f, 1.0f);
    if (rng.next() % 2) {
        p.bias.resize(cout);
        fill_uniform(p.bias, rng, -1.0f, 1.0f);
    }
    p.sh = sh;
    p.sw = sw;
    p.ph = ph;
    p.pw = pw;
    p.dh = dh;
    p.dw = dw;
    return normwise_err(conv2d(x, p), conv2d_reference(x, p));
}

double avg_pool_case(SplitMix64& rng) {
    const int kh = 1 + static_cast<int>(rng.next() % 4), kw = 1 + static_cast<int>(rng.next() % 4);
    const int sh = 1 + static_cast<int>(rng.next() % 3), sw = 1 + static_cast<int>(rng.next() % 3);
    const int ph = static_cast<int>(rng.next() % kh), pw = static_cast<int>(rng.next() % kw);
    const bool cip = rng.next() % 2;
    const int h = kh + static_cast<int>(rng.next() % 7), w = kw + static_cast<int>(rng.next() % 7);
    const int c = 1 + static_cast<int>(rng.next() % 3), n = 1 + static_cast<int>(rng.next() % 2);
    Tensor4 x(n, c, h, w);
    fill_uniform(x, rng, -2.0f, 2.0f);

    const int oh = (h + 2 * ph - kh) / sh + 1;
    const int ow = (w + 2 * pw - kw) / sw + 1;
    Tensor4 want(n, c, oh, ow);
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double s = 0.0;
                    int cnt = 0;
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            const int iy = oy * sh - ph + ky, ix = ox * sw - pw + kx;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            s += x.at(ni, ci, iy, ix);
                            ++cnt;
                        }
                    const int div = cip ? kh * kw : cnt;
                    want.at(ni, ci, oy, ox) = div == 0 ? 0.0f : static_cast<float>(s / div);
                }
    return normwise_err(avg_pool2d(x, kh, kw, sh, sw, ph, pw, cip), want);
}

double adaptive_pool_case(SplitMix64& rng) {
    const int h = 1 + static_cast<int>(rng.next() % 10), w = 1 + static_cast<int>(rng.next() % 10);
    const int oh = 1 + static_cast<int>(rng.next() % h), ow = 1 + static_cast<int>(rng.next() % w);
    const int c = 1 + static_cast<int>(rng.next() % 3), n = 1 + static_cast<int>(rng.next() % 2);
    Tensor4 x(n, c, h, w);
    fill_uniform(x, rng, -2.0f, 2.0f);

    Tensor4 want(n, c, oh, ow);
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const int y0 = static_cast<int>(std::floor(oy * h / static_cast<double>(oh)));
                    const int y1 = static_cast<int>(std::ceil((oy + 1) * h / static_cast<double>(oh)));
                    const int x0 = static_cast<int>(std::floor(ox * w / static_cast<double>(ow)));
                    const int x1 = static_cast<int>(std::ceil((ox + 1) * w / static_cast<double>(ow)));
                    double s = 0.0;
                    for (int iy = y0; iy < y1; ++iy)
                        for (int ix = x0; ix < x1; ++ix) s += x.at(ni, ci, iy, ix);
                    want.at(ni, ci, oy, ox) = static_cast<float>(s / ((y1 - y0) * (x1 - x0)));
                }
    return normwise_err(adaptive_avg_pool2d(x, oh, ow), want);
}

double batch_norm_case(SplitMix64& rng) {
    const int n = 1 + static_cast<int>(rng.next() % 2), c = 1 + static_cast<int>(rng.next() % 6);
    const int h = 1 + static_cast<int>(rng.next() % 8), w = 1 + static_cast<int>(rng.next() % 8);
    Tensor4 x(n, c, h, w);
    fill_uniform(x, rng, -2.0f, 2.0f);
    BnParams bn;
    bn.gamma.resize(c);
    bn.beta.resize(c);
    bn.mean.resize(c);
    bn.var.resize(c);
    fill_uniform(bn.gamma, rng, -2.0f, 2.0f);
    fill_uniform(bn.beta, rng, -1.0f, 1.0f);
    fill_uniform(bn.mean, rng, -1.0f, 1.0f);
    for (float& v : bn.var) v = rng.uniform_in(0.05f, 2.0f);

    Tensor4 want(n, c, h, w);
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int iy = 0; iy < h; ++iy)
                for (int ix = 0; ix < w; ++ix) {
                    const double z = (x.at(ni, ci, iy, ix) - static_cast<double>(bn.mean[ci])) /
                                     std::sqrt(static_cast<double>(bn.var[ci]) + bn.eps);
                    want.at(ni, ci, iy, ix) = static_cast<float>(z * bn.gamma[ci] + bn.beta[ci]);
                }
    return normwise_err(batch_norm_infer(x, bn), want);
}

double resize_case(SplitMix64& rng) {
    const int h = 1 + static_cast<int>(rng.next() % 8), w = 1 + static_cast<int>(rng.next() % 8);
    const int oh = 1 + static_cast<int>(rng.next() % 12), ow = 1 + static_cast<int>(rng.next() % 12);
    const int c = 1 + static_cast<int>(rng.next() % 3), n = 1 + static_cast<int>(rng.next() % 2);
    Tensor4 x(n, c, h, w);
    fill_uniform(x, rng, -2.0f, 2.0f);

    auto axis = [](int dst, int in, int out, int& i0, int& i1, double& f) {
        double s = (dst + 0.5) * (in / static_cast<double>(out)) - 0.5;
        if (s < 0.0) s = 0.0;
        i0 = std::min(static_cast<int>(s), in - 1);
        i1 = std::min(i0 + 1, in - 1);
        f = s - i0;
    };
    Tensor4 want(n, c, oh, ow);
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    int y0, y1, x0, x1;
                    double fy, fx;
                    axis(oy, h, oh, y0, y1, fy);
                    axis(ox, w, ow, x0, x1, fx);
                    const double top = (1.0 - fx) * x.at(ni, ci, y0, x0) + fx * x.at(ni, ci, y0, x1);
                    const double bot = (1.0 - fx) * x.at(ni, ci, y1, x0) + fx * x.at(ni, ci, y1, x1);
                    want.at(ni, ci, oy, ox) = static_cast<float>((1.0 - fy) * top + fy * bot);
                }
    return normwise_err(bilinear_resize(x, oh, ow), want);
}

double fold_case(SplitMix64& rng) {
    const int k = rng.next() % 2 ? 3 : 1;
    const int cin = 1 + static_cast<int>(rng.next() % 4), cout = 1 + static_cast<int>(rng.next() % 4);
    const int h = 4 + static_cast<int>(rng.next() % 5), w = 4 + static_cast<int>(rng.next() % 5);
    Tensor4 x(1, cin, h, w);
    fill_uniform(x, rng, -1.0f, 1.0f);
    ConvParams p;
    p.weight = Tensor4(cout, cin, k, k);
    fill_uniform(p.weight, rng, -1.0f, 1.0f);
    if (rng.next() % 2) {
        p.bias.resize(cout);
        fill_uniform(p.bias, rng, -1.0f, 1.0f);
    }
    p.ph = p.pw = k / 2;
    BnParams bn;
    bn.gamma.resize(cout);
    bn.beta.resize(cout);
    bn.mean.resize(cout);
    bn.var.resize(cout);
    fill_uniform(bn.gamma, rng, -2.0f, 2.0f);
    fill_uniform(bn.beta, rng, -1.0f, 1.0f);
    fill_uniform(bn.mean, rng, -1.0f, 1.0f);
    for (float& v : bn.var) v = rng.uniform_in(0.05f, 2.0f);

    const Tensor4 unfolded = batch_norm_infer(conv2d(x, p), bn);
    ConvParams folded = p;
    fold_bn_into_conv(folded, bn);
    return max_abs_err(conv2d(x, folded), unfolded);
}

} // namespace

SelftestResult run_selftest(uint64_t seed) {
    SelftestResult r;
    run_suite(r, "conv2d vs direct summation", 126, 1e-5, seed, conv_case);
    run_suite(r, "avg_pool2d vs window scan", 110, 1e-6, seed, avg_pool_case);
    run_suite(r, "adaptive_avg_pool2d vs bin enumeration", 110, 1e-6, seed, adaptive_pool_case);
    run_suite(r, "batch_norm_infer vs scalar formula", 110, 1e-6, seed, batch_norm_case);
    run_suite(r, "bilinear_resize vs interpolation formula", 110, 1e-6, seed, resize_case);
    run_suite(r, "bn fold vs compose-then-compare (abs)", 110, 1e-4, seed, fold_case);
    return r;
}

std::string format_selftest(const SelftestResult& r) {
    std::ostringstream os;
    for (const std::string& line : r.lines) os << line << "\n";
    os << "suites: " << r.suites << ", failed: " << r.failed << "\n";
    return os.str();
}

} // namespace sanet
