#include "sanet/apppm.hpp"

namespace sanet {

namespace {
int grid_extent(int in, int div) { return div == 0 ? 1 : (in + div - 1) / div; }
} // namespace

void validate_apppm_config(const ApppmConfig& cfg) {
    int globals = 0, asymmetric = 0;
    for (const PoolGrid& g : cfg.grids) {
        if (g.is_global()) {
            ++globals;
            continue;
        }
        if (g.div_h <= 0 || g.div_w <= 0) throw ValueError("apppm: grid divisors must be positive");
        if (g.div_h != g.div_w) ++asymmetric;
    }
    if (globals != 1) throw ValueError("apppm: exactly one global grid required");
    if (asymmetric < 2) throw ValueError("apppm: need at least two asymmetric grids");
    if (cfg.in_c <= 0 || cfg.branch_c <= 0 || cfg.out_c <= 0) throw ValueError("apppm: channel counts must be positive");
}

Tensor4 apppm_forward(const Tensor4& y64, const Apppm& m) {
    if (y64.c != m.cfg.in_c)
        throw ShapeError("apppm: expected " + std::to_string(m.cfg.in_c) + " input channels, got " + y64.dims_str());
    std::vector<Tensor4> branches;
    branches.reserve(m.cfg.grids.size());
    for (size_t i = 0; i < m.cfg.grids.size(); ++i) {
        const PoolGrid& g = m.cfg.grids[i];
        Tensor4 pooled = adaptive_avg_pool2d(y64, grid_extent(y64.h, g.div_h), grid_extent(y64.w, g.div_w));
        Tensor4 feat = conv_unit_forward(pooled, m.scale[i]);
        branches.push_back(bilinear_resize(feat, y64.h, y64.w));
    }
    const Tensor4 f = conv_unit_forward(concat_channels(branches), m.fuse);
    const Tensor4 r = conv_unit_forward(y64, m.res);
    const Tensor4 a = add(sigmoid(conv2d(f, m.att_h.conv)), sigmoid(conv2d(f, m.att_v.conv)));
    Tensor4 fused = mul(f, add_scalar(a, 1.0f));
    detail::add_inplace(fused, mul(r, sub(Tensor4(a.n, a.c, a.h, a.w, 2.0f), a)));
    return conv_unit_forward(fused, m.out);
}

Tensor4 ppm_forward(const Tensor4& y64, const Ppm& m) {
    if (y64.c != m.cfg.in_c)
        throw ShapeError("ppm: expected " + std::to_string(m.cfg.in_c) + " input channels, got " + y64.dims_str());
    std::vector<Tensor4> parts;
    parts.reserve(m.cfg.grids.size() + 1);
    parts.push_back(y64);
    for (size_t i = 0; i < m.cfg.grids.size(); ++i) {
        const int g = m.cfg.grids[i];
        Tensor4 pooled = adaptive_avg_pool2d(y64, g, g);
        Tensor4 feat = conv_unit_forward(pooled, m.scale[i]);
        parts.push_back(bilinear_resize(feat, y64.h, y64.w));
    }
    return conv_unit_forward(concat_channels(parts), m.fuse);
}

} // namespace sanet
