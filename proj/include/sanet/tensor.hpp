#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sanet/error.hpp"

namespace sanet {

// Dense NCHW float tensor. All inference kernels operate on this layout.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, float fill = 0.0f)
        : n(n_), c(c_), h(h_), w(w_) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0)
            throw ShapeError("negative tensor dimension");
        data.assign(size(), fill);
    }

    size_t size() const {
        return static_cast<size_t>(n) * c * h * w;
    }

    float& at(int ni, int ci, int hi, int wi) {
        return data[((static_cast<size_t>(ni) * c + ci) * h + hi) * w + wi];
    }
    float at(int ni, int ci, int hi, int wi) const {
        return data[((static_cast<size_t>(ni) * c + ci) * h + hi) * w + wi];
    }

    float* plane(int ni, int ci) {
        return data.data() + (static_cast<size_t>(ni) * c + ci) * h * w;
    }
    const float* plane(int ni, int ci) const {
        return data.data() + (static_cast<size_t>(ni) * c + ci) * h * w;
    }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string dims_str() const;
};

// Integer label map for segmentation targets and predictions.
struct ClassMap {
    int h = 0, w = 0;
    std::vector<int32_t> data;
    int32_t ignore_value = 255;

    ClassMap() = default;
    ClassMap(int h_, int w_, int32_t fill = 0) : h(h_), w(w_) {
        if (h_ < 0 || w_ < 0) throw ShapeError("negative map dimension");
        data.assign(static_cast<size_t>(h_) * w_, fill);
    }

    int32_t& at(int hi, int wi) { return data[static_cast<size_t>(hi) * w + wi]; }
    int32_t at(int hi, int wi) const { return data[static_cast<size_t>(hi) * w + wi]; }
};

Tensor4 add(const Tensor4& a, const Tensor4& b);
Tensor4 sub(const Tensor4& a, const Tensor4& b);
Tensor4 mul(const Tensor4& a, const Tensor4& b);
Tensor4 add_scalar(const Tensor4& a, float s);
Tensor4 mul_scalar(const Tensor4& a, float s);
Tensor4 concat_channels(const std::vector<Tensor4>& parts);
inline Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
    return concat_channels(std::vector<Tensor4>{a, b});
}
Tensor4 softmax_channels(const Tensor4& x);
ClassMap argmax_channels(const Tensor4& x);

} // namespace sanet
