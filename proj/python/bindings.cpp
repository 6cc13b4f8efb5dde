#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <utility>

#include "sanet/bench.hpp"
#include "sanet/model.hpp"
#include "sanet/rf.hpp"
#include "sanet/selftest.hpp"
#include "sanet/threading.hpp"
#include "sanet/train.hpp"

namespace py = pybind11;
using namespace sanet;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int32_t, py::array::c_style | py::array::forcecast>;

Tensor4 tensor_from(const FloatArray& a) {
    const py::buffer_info b = a.request();
    int n, c, h, w;
    if (b.ndim == 4) {
        n = static_cast<int>(b.shape[0]);
        c = static_cast<int>(b.shape[1]);
        h = static_cast<int>(b.shape[2]);
        w = static_cast<int>(b.shape[3]);
    } else if (b.ndim == 3) {
        n = 1;
        c = static_cast<int>(b.shape[0]);
        h = static_cast<int>(b.shape[1]);
        w = static_cast<int>(b.shape[2]);
    } else {
        throw py::value_error("expected a (c,h,w) or (n,c,h,w) float array, got ndim=" +
                              std::to_string(b.ndim));
    }
    Tensor4 t(n, c, h, w);
    std::memcpy(t.data.data(), b.ptr, t.size() * sizeof(float));
    return t;
}

py::array_t<float> array_from(const Tensor4& t) {
    py::array_t<float> a({t.n, t.c, t.h, t.w});
    std::memcpy(a.request().ptr, t.data.data(), t.size() * sizeof(float));
    return a;
}

ClassMap map_from(const IntArray& a) {
    const py::buffer_info b = a.request();
    if (b.ndim != 2) throw py::value_error("expected a (h,w) int32 array");
    ClassMap m(static_cast<int>(b.shape[0]), static_cast<int>(b.shape[1]));
    std::memcpy(m.data.data(), b.ptr, m.data.size() * sizeof(int32_t));
    return m;
}

py::array_t<int32_t> array_from(const ClassMap& m) {
    py::array_t<int32_t> a({m.h, m.w});
    std::memcpy(a.request().ptr, m.data.data(), m.data.size() * sizeof(int32_t));
    return a;
}

ConvParams conv_params(const FloatArray& weight, const std::optional<FloatArray>& bias,
                       std::pair<int, int> stride, std::pair<int, int> padding,
                       std::pair<int, int> dilation) {
    ConvParams p;
    p.weight = tensor_from(weight);
    if (p.weight.n == 1 && weight.request().ndim == 3)
        throw py::value_error("conv weight must be 4-d (out_c, in_c, kh, kw)");
    if (bias) {
        const py::buffer_info b = bias->request();
        if (b.ndim != 1) throw py::value_error("conv bias must be 1-d");
        p.bias.assign(static_cast<const float*>(b.ptr), static_cast<const float*>(b.ptr) + b.shape[0]);
    }
    p.sh = stride.first;
    p.sw = stride.second;
    p.ph = padding.first;
    p.pw = padding.second;
    p.dh = dilation.first;
    p.dw = dilation.second;
    return p;
}

std::vector<ConvStage> stages_from(const std::vector<std::array<int, 6>>& chain) {
    std::vector<ConvStage> out;
    out.reserve(chain.size());
    for (const auto& s : chain) out.push_back({s[0], s[1], s[2], s[3], s[4], s[5]});
    return out;
}

// Weight store plus the runnable network, the unit every binding hands out.
struct PyModel {
    ModelConfig cfg;
    WeightStore store;
    Model net;
    bool folded = false;

    static PyModel from_store(WeightStore s) {
        PyModel p;
        p.cfg = config_from_store(s);
        p.store = std::move(s);
        p.net = build(p.cfg, p.store);
        return p;
    }
};

} // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Stripe-attention segmentation engine (CPU, float32)";

    py::register_exception<ShapeError>(mod, "ShapeError", PyExc_ValueError);
    py::register_exception<FormatError>(mod, "FormatError", PyExc_ValueError);
    py::register_exception<ValueError>(mod, "ValueError", PyExc_ValueError);

    mod.def(
        "conv2d",
        [](const FloatArray& x, const FloatArray& w, const std::optional<FloatArray>& bias,
           std::pair<int, int> stride, std::pair<int, int> padding, std::pair<int, int> dilation,
           bool reference) {
            const ConvParams p = conv_params(w, bias, stride, padding, dilation);
            const Tensor4 t = tensor_from(x);
            return array_from(reference ? conv2d_reference(t, p) : conv2d(t, p));
        },
        py::arg("x"), py::arg("weight"), py::arg("bias") = py::none(),
        py::arg("stride") = std::pair<int, int>{1, 1}, py::arg("padding") = std::pair<int, int>{0, 0},
        py::arg("dilation") = std::pair<int, int>{1, 1}, py::arg("reference") = false,
        "2-d convolution over an NCHW array; reference=True selects the naive-summation path");

    mod.def(
        "avg_pool2d",
        [](const FloatArray& x, std::pair<int, int> kernel, std::pair<int, int> stride,
           std::pair<int, int> padding, bool count_includes_pad) {
            return array_from(avg_pool2d(tensor_from(x), kernel.first, kernel.second, stride.first,
                                         stride.second, padding.first, padding.second, count_includes_pad));
        },
        py::arg("x"), py::arg("kernel"), py::arg("stride"), py::arg("padding") = std::pair<int, int>{0, 0},
        py::arg("count_includes_pad") = false);

    mod.def(
        "adaptive_avg_pool2d",
        [](const FloatArray& x, int oh, int ow) { return array_from(adaptive_avg_pool2d(tensor_from(x), oh, ow)); },
        py::arg("x"), py::arg("out_h"), py::arg("out_w"));

    mod.def(
        "bilinear_resize",
        [](const FloatArray& x, int oh, int ow) { return array_from(bilinear_resize(tensor_from(x), oh, ow)); },
        py::arg("x"), py::arg("out_h"), py::arg("out_w"));

    mod.def(
        "softmax", [](const FloatArray& x) { return array_from(softmax_channels(tensor_from(x))); },
        py::arg("x"), "channel softmax of an NCHW array");

    mod.def(
        "argmax", [](const FloatArray& x) { return array_from(argmax_channels(tensor_from(x))); },
        py::arg("x"), "per-pixel channel argmax of a batch-1 NCHW array, as an (h,w) int32 map");

    mod.def(
        "receptive_field",
        [](const std::vector<std::array<int, 6>>& chain) { return receptive_field(stages_from(chain)); },
        py::arg("chain"),
        "analytic receptive field of a conv chain given as (kh,kw,sh,sw,dh,dw) tuples");

    mod.def(
        "impulse_support_span",
        [](const std::vector<std::array<int, 6>>& chain, bool axis_w) {
            return impulse_support_span(stages_from(chain), axis_w);
        },
        py::arg("chain"), py::arg("axis_w") = false);

    mod.def(
        "cross_entropy",
        [](const FloatArray& logits, const IntArray& labels, int32_t ignore) {
            return cross_entropy(tensor_from(logits), map_from(labels), ignore);
        },
        py::arg("logits"), py::arg("labels"), py::arg("ignore") = 255);

    mod.def(
        "miou",
        [](const IntArray& pred, const IntArray& labels, int num_classes, int32_t ignore) {
            const MiouResult r = miou(map_from(pred), map_from(labels), num_classes, ignore);
            py::dict d;
            d["mean"] = r.mean;
            d["per_class"] = r.per_class;
            d["present"] = r.present;
            return d;
        },
        py::arg("pred"), py::arg("labels"), py::arg("num_classes"), py::arg("ignore") = 255);

    mod.def("poly_lr", &poly_lr, py::arg("base"), py::arg("iter"), py::arg("max_iter"),
            py::arg("power") = 0.9);

    mod.def(
        "selftest",
        [](uint64_t seed) {
            const SelftestResult r = run_selftest(seed);
            return py::make_tuple(r.ok(), r.lines);
        },
        py::arg("seed") = 7, "run the kernel-vs-reference suites; returns (ok, report lines)");

    mod.def("set_threads", &set_threads, py::arg("n"),
            "worker threads for conv kernels; 1 = deterministic, 0 = hardware concurrency");
    mod.def("thread_count", &thread_count);

    py::class_<PyModel>(mod, "Model")
        .def_static(
            "load", [](const std::string& path) { return PyModel::from_store(read_stf(path)); },
            py::arg("path"), "build a model from a weight file")
        .def_static(
            "random",
            [](const std::string& variant, int num_classes, uint64_t seed) {
                if (variant.size() != 1) throw py::value_error("variant must be 's' or 'm'");
                const ModelConfig cfg = make_config(variant[0], num_classes);
                return PyModel::from_store(init_weights(cfg, seed));
            },
            py::arg("variant") = "s", py::arg("num_classes") = 19, py::arg("seed") = 0,
            "build a model with seeded random weights")
        .def_property_readonly("variant", [](const PyModel& p) { return std::string(1, p.cfg.variant); })
        .def_property_readonly("num_classes", [](const PyModel& p) { return p.cfg.num_classes; })
        .def_property_readonly("folded", [](const PyModel& p) { return p.folded; })
        .def_property_readonly("param_count", [](const PyModel& p) { return p.store.value_count(); })
        .def(
            "forward", [](const PyModel& p, const FloatArray& img) { return array_from(forward(p.net, tensor_from(img))); },
            py::arg("image"), "full-resolution class logits for a (3,h,w) or (1,3,h,w) array")
        .def(
            "infer",
            [](const PyModel& p, const FloatArray& img, const std::vector<double>& scales) {
                const Tensor4 t = tensor_from(img);
                if (scales.empty()) return array_from(softmax_channels(forward(p.net, t)));
                return array_from(multi_scale_infer(p.net, t, scales));
            },
            py::arg("image"), py::arg("scales") = std::vector<double>{},
            "averaged class probabilities, optionally over rescaled passes")
        .def(
            "predict",
            [](const PyModel& p, const FloatArray& img) {
                return array_from(argmax_channels(forward(p.net, tensor_from(img))));
            },
            py::arg("image"), "per-pixel class ids")
        .def("fold",
             [](PyModel& p) {
                 if (!p.folded) fold_model(p.net);
                 p.folded = true;
             })
        .def(
            "save", [](const PyModel& p, const std::string& path) { write_stf(p.store, path); },
            py::arg("path"), "write the loaded (unfolded) weights")
        .def(
            "describe",
            [](const PyModel& p, int h, int w) { return format_report(describe(p.cfg, p.store, h, w)); },
            py::arg("h") = 1024, py::arg("w") = 2048)
        .def(
            "bench",
            [](const PyModel& p, int h, int w, int iters, int warmup) {
                const BenchReport r = run_bench(p.net, h, w, iters, warmup);
                py::dict d;
                d["mean_ms"] = r.mean_ms;
                d["median_ms"] = r.median_ms;
                d["min_ms"] = r.min_ms;
                d["fps"] = r.fps;
                d["cov"] = r.cov;
                d["latencies_ms"] = r.latencies_ms;
                return d;
            },
            py::arg("h") = 256, py::arg("w") = 512, py::arg("iters") = 10, py::arg("warmup") = 2)
        .def("__repr__", [](const PyModel& p) {
            return "<sanet.Model variant=" + std::string(1, p.cfg.variant) +
                   " classes=" + std::to_string(p.cfg.num_classes) +
                   " params=" + std::to_string(p.store.value_count()) + (p.folded ? " folded>" : ">");
        });

    mod.def(
        "export_random",
        [](const std::string& path, const std::string& variant, int num_classes, uint64_t seed) {
            if (variant.size() != 1) throw py::value_error("variant must be 's' or 'm'");
            write_stf(init_weights(make_config(variant[0], num_classes), seed), path);
        },
        py::arg("path"), py::arg("variant") = "s", py::arg("num_classes") = 19, py::arg("seed") = 0,
        "write a seeded random weight file");
}
