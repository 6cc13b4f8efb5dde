#include "sanet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sanet {

std::string Tensor4::dims_str() const {
    std::ostringstream os;
    os << n << "x" << c << "x" << h << "x" << w;
    return os.str();
}

static void check_same(const Tensor4& a, const Tensor4& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.dims_str() + " vs " + b.dims_str());
}

Tensor4 add(const Tensor4& a, const Tensor4& b) {
    check_same(a, b, "add");
    Tensor4 out(a.n, a.c, a.h, a.w);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

Tensor4 sub(const Tensor4& a, const Tensor4& b) {
    check_same(a, b, "sub");
    Tensor4 out(a.n, a.c, a.h, a.w);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
    return out;
}

Tensor4 mul(const Tensor4& a, const Tensor4& b) {
    check_same(a, b, "mul");
    Tensor4 out(a.n, a.c, a.h, a.w);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

Tensor4 add_scalar(const Tensor4& a, float s) {
    Tensor4 out(a.n, a.c, a.h, a.w);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + s;
    return out;
}

Tensor4 mul_scalar(const Tensor4& a, float s) {
    Tensor4 out(a.n, a.c, a.h, a.w);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * s;
    return out;
}

Tensor4 concat_channels(const std::vector<Tensor4>& parts) {
    if (parts.empty()) throw ValueError("concat_channels: empty part list");
    const Tensor4& a = parts.front();
    int total_c = 0;
    for (const Tensor4& p : parts) {
        if (p.n != a.n || p.h != a.h || p.w != a.w)
            throw ShapeError("concat_channels: spatial/batch mismatch " + a.dims_str() + " vs " + p.dims_str());
        total_c += p.c;
    }
    Tensor4 out(a.n, total_c, a.h, a.w);
    const size_t plane = static_cast<size_t>(a.h) * a.w;
    for (int ni = 0; ni < a.n; ++ni) {
        int off = 0;
        for (const Tensor4& p : parts)
            for (int ci = 0; ci < p.c; ++ci)
                std::copy_n(p.plane(ni, ci), plane, out.plane(ni, off++));
    }
    return out;
}

Tensor4 softmax_channels(const Tensor4& x) {
    if (x.c <= 0) throw ShapeError("softmax_channels: empty channel axis");
    Tensor4 out(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int ni = 0; ni < x.n; ++ni) {
        for (size_t p = 0; p < plane; ++p) {
            float m = x.plane(ni, 0)[p];
            for (int ci = 1; ci < x.c; ++ci) m = std::max(m, x.plane(ni, ci)[p]);
            double sum = 0.0;
            for (int ci = 0; ci < x.c; ++ci) {
                double e = std::exp(static_cast<double>(x.plane(ni, ci)[p]) - m);
                out.plane(ni, ci)[p] = static_cast<float>(e);
                sum += e;
            }
            const float inv = static_cast<float>(1.0 / sum);
            for (int ci = 0; ci < x.c; ++ci) out.plane(ni, ci)[p] *= inv;
        }
    }
    return out;
}

ClassMap argmax_channels(const Tensor4& x) {
    if (x.n != 1) throw ShapeError("argmax_channels: expected batch 1, got " + x.dims_str());
    ClassMap out(x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (size_t p = 0; p < plane; ++p) {
        int best = 0;
        float bv = x.plane(0, 0)[p];
        for (int ci = 1; ci < x.c; ++ci) {
            float v = x.plane(0, ci)[p];
            if (v > bv) { bv = v; best = ci; }
        }
        out.data[p] = best;
    }
    return out;
}

} // namespace sanet
