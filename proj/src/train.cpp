#include "sanet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sanet/rng.hpp"
#include "sanet/sad.hpp"

namespace sanet {

namespace {

void check_label_dims(const Tensor4& logits, const ClassMap& labels) {
    if (logits.n != 1) throw ShapeError("loss: expected batch 1, got " + logits.dims_str());
    if (logits.h != labels.h || logits.w != labels.w)
        throw ShapeError("loss: logits " + logits.dims_str() + " vs labels " + std::to_string(labels.h) +
                         "x" + std::to_string(labels.w));
}

// -log softmax at the true class, one value per non-ignored pixel.
std::vector<std::pair<double, double>> pixel_ce(const Tensor4& logits, const ClassMap& labels,
                                                int32_t ignore, std::vector<size_t>* kept_idx) {
    check_label_dims(logits, labels);
    const size_t plane = static_cast<size_t>(logits.h) * logits.w;
    std::vector<std::pair<double, double>> out; // (loss, true-class probability)
    out.reserve(plane);
    for (size_t p = 0; p < plane; ++p) {
        const int32_t label = labels.data[p];
        if (label == ignore) continue;
        if (label < 0 || label >= logits.c)
            throw ValueError("loss: label " + std::to_string(label) + " outside [0, " +
                             std::to_string(logits.c) + ")");
        double mx = logits.plane(0, 0)[p];
        for (int ci = 1; ci < logits.c; ++ci) mx = std::max(mx, static_cast<double>(logits.plane(0, ci)[p]));
        double denom = 0.0;
        for (int ci = 0; ci < logits.c; ++ci) denom += std::exp(logits.plane(0, ci)[p] - mx);
        const double log_prob = (logits.plane(0, label)[p] - mx) - std::log(denom);
        out.emplace_back(-log_prob, std::exp(log_prob));
        if (kept_idx) kept_idx->push_back(p);
    }
    return out;
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

} // namespace

double cross_entropy(const Tensor4& logits, const ClassMap& labels, int32_t ignore) {
    const auto losses = pixel_ce(logits, labels, ignore, nullptr);
    if (losses.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [loss, prob] : losses) sum += loss;
    return sum / static_cast<double>(losses.size());
}

double ohem_cross_entropy(const Tensor4& logits, const ClassMap& labels, const LossConfig& cfg) {
    if (cfg.ohem_threshold <= 0.0 || cfg.ohem_threshold >= 1.0)
        throw ValueError("ohem: threshold must lie in (0,1)");
    const auto losses = pixel_ce(logits, labels, cfg.ignore, nullptr);
    if (losses.empty()) return 0.0;
    const int64_t total = static_cast<int64_t>(logits.h) * logits.w;
    int64_t min_kept = cfg.ohem_min_kept < 0 ? std::max<int64_t>(1, total / 16) : cfg.ohem_min_kept;
    if (min_kept < 1) throw ValueError("ohem: min_kept must be at least 1");
    min_kept = std::min<int64_t>(min_kept, static_cast<int64_t>(losses.size()));

    double sum = 0.0;
    int64_t hard = 0;
    for (const auto& [loss, prob] : losses)
        if (prob < cfg.ohem_threshold) {
            sum += loss;
            ++hard;
        }
    if (hard >= min_kept) return sum / static_cast<double>(hard);

    // Too few hard pixels: rank everything by loss, highest first, ties by
    // pixel order, and average the top min_kept.
    std::vector<size_t> order(losses.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return losses[a].first > losses[b].first; });
    sum = 0.0;
    for (int64_t i = 0; i < min_kept; ++i) sum += losses[order[static_cast<size_t>(i)]].first;
    return sum / static_cast<double>(min_kept);
}

ClassMap boundary_targets(const ClassMap& labels) {
    ClassMap out(labels.h, labels.w);
    out.ignore_value = labels.ignore_value;
    const int dy[4] = {-1, 1, 0, 0};
    const int dx[4] = {0, 0, -1, 1};
    for (int y = 0; y < labels.h; ++y)
        for (int x = 0; x < labels.w; ++x) {
            const int32_t v = labels.at(y, x);
            if (v == labels.ignore_value) {
                out.at(y, x) = out.ignore_value;
                continue;
            }
            int32_t edge = 0;
            for (int k = 0; k < 4; ++k) {
                const int ny = y + dy[k], nx = x + dx[k];
                if (ny < 0 || ny >= labels.h || nx < 0 || nx >= labels.w) continue;
                const int32_t nv = labels.at(ny, nx);
                if (nv != labels.ignore_value && nv != v) {
                    edge = 1;
                    break;
                }
            }
            out.at(y, x) = edge;
        }
    return out;
}

double boundary_loss(const Tensor4& boundary_logits, const ClassMap& targets) {
    if (boundary_logits.c != 1)
        throw ShapeError("boundary loss: expected single-channel logits, got " + boundary_logits.dims_str());
    check_label_dims(boundary_logits, targets);
    const size_t plane = static_cast<size_t>(targets.h) * targets.w;
    int64_t pos = 0, neg = 0;
    for (size_t p = 0; p < plane; ++p) {
        const int32_t t = targets.data[p];
        if (t == targets.ignore_value) continue;
        if (t == 1)
            ++pos;
        else if (t == 0)
            ++neg;
        else
            throw ValueError("boundary loss: target " + std::to_string(t) + " is not binary");
    }
    if (pos + neg == 0) return 0.0;
    const double w_pos = pos > 0 ? static_cast<double>(neg) / pos : 1.0;
    double sum = 0.0;
    for (size_t p = 0; p < plane; ++p) {
        const int32_t t = targets.data[p];
        if (t == targets.ignore_value) continue;
        const double z = boundary_logits.plane(0, 0)[p];
        sum += t == 1 ? w_pos * softplus(-z) : softplus(z);
    }
    return sum / static_cast<double>(pos + neg);
}

double poly_lr(double base, int64_t iter, int64_t max_iter, double power) {
    if (max_iter <= 0) throw ValueError("poly_lr: max_iter must be positive");
    if (iter < 0 || iter > max_iter) throw ValueError("poly_lr: iter outside [0, max_iter]");
    return base * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

MiouAccumulator::MiouAccumulator(int num_classes, int32_t ignore)
    : num_classes_(num_classes),
      ignore_(ignore),
      confusion_(num_classes > 0 ? static_cast<size_t>(num_classes) * num_classes : 0, 0) {
    if (num_classes <= 0) throw ValueError("miou: num_classes must be positive");
}

void MiouAccumulator::add(const ClassMap& pred, const ClassMap& labels) {
    if (pred.h != labels.h || pred.w != labels.w)
        throw ShapeError("miou: prediction and label dims differ");
    for (size_t p = 0; p < labels.data.size(); ++p) {
        const int32_t t = labels.data[p];
        if (t == ignore_) continue;
        const int32_t q = pred.data[p];
        if (t < 0 || t >= num_classes_) throw ValueError("miou: label " + std::to_string(t) + " out of range");
        if (q < 0 || q >= num_classes_)
            throw ValueError("miou: prediction " + std::to_string(q) + " out of range");
        ++confusion_[static_cast<size_t>(t) * num_classes_ + q];
    }
}

MiouResult MiouAccumulator::result() const {
    MiouResult res;
    res.per_class.assign(num_classes_, std::numeric_limits<double>::quiet_NaN());
    res.present.assign(num_classes_, false);
    double sum = 0.0;
    int counted = 0;
    for (int c = 0; c < num_classes_; ++c) {
        int64_t tp = confusion_[static_cast<size_t>(c) * num_classes_ + c];
        int64_t fp = 0, fn = 0;
        for (int o = 0; o < num_classes_; ++o) {
            if (o == c) continue;
            fp += confusion_[static_cast<size_t>(o) * num_classes_ + c];
            fn += confusion_[static_cast<size_t>(c) * num_classes_ + o];
        }
        if (tp + fp + fn == 0) continue;
        res.present[c] = true;
        res.per_class[c] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
        sum += res.per_class[c];
        ++counted;
    }
    res.mean = counted > 0 ? sum / counted : 0.0;
    return res;
}

MiouResult miou(const ClassMap& pred, const ClassMap& labels, int num_classes, int32_t ignore) {
    MiouAccumulator acc(num_classes, ignore);
    acc.add(pred, labels);
    return acc.result();
}

GradCheckReport finite_diff_check(const std::function<double(const std::vector<std::vector<double>>&)>& eval_fn,
                                  const std::vector<std::vector<double>>& params,
                                  const std::vector<std::vector<double>>& analytic_grads,
                                  const std::vector<std::string>& names, double eps, int coords_per_tensor,
                                  uint64_t seed) {
    if (params.size() != analytic_grads.size() || params.size() != names.size())
        throw ValueError("finite_diff_check: params/grads/names size mismatch");
    GradCheckReport report;
    std::vector<std::vector<double>> work = params;
    for (size_t t = 0; t < params.size(); ++t) {
        if (params[t].size() != analytic_grads[t].size())
            throw ValueError("finite_diff_check: gradient size mismatch for " + names[t]);
        GradCheckEntry entry;
        entry.name = names[t];
        const size_t len = params[t].size();
        std::vector<size_t> coords;
        if (static_cast<int>(len) <= coords_per_tensor) {
            coords.resize(len);
            std::iota(coords.begin(), coords.end(), size_t{0});
        } else {
            SplitMix64 rng(splitmix64_mix(seed ^ (0x9E3779B97F4A7C15ull * (t + 1))));
            for (int i = 0; i < coords_per_tensor; ++i)
                coords.push_back(static_cast<size_t>(rng.uniform() * static_cast<double>(len)));
        }
        for (size_t idx : coords) {
            const double saved = work[t][idx];
            work[t][idx] = saved + eps;
            const double fp = eval_fn(work);
            work[t][idx] = saved - eps;
            const double fm = eval_fn(work);
            work[t][idx] = saved;
            const double fd = (fp - fm) / (2.0 * eps);
            const double an = analytic_grads[t][idx];
            const double abs_err = std::fabs(fd - an);
            const double rel_err = abs_err / std::max({1e-6, std::fabs(fd), std::fabs(an)});
            entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
            entry.max_rel_err = std::max(entry.max_rel_err, rel_err);
        }
        report.worst_abs = std::max(report.worst_abs, entry.max_abs_err);
        report.worst_rel = std::max(report.worst_rel, entry.max_rel_err);
        report.per_tensor.push_back(std::move(entry));
    }
    return report;
}

GradCheckReport sad_gradient_check(uint64_t seed, int n, int c, int h, int w, double eps) {
    SplitMix64 rng(splitmix64_mix(seed));
    auto rand_tensor = [&](int tn, int tc, int th, int tw, double bound) {
        Tensor4 t(tn, tc, th, tw);
        for (float& v : t.data) v = static_cast<float>(rng.uniform_in(-bound, bound));
        return t;
    };
    Tensor4 x = rand_tensor(n, c, h, w, 1.0);
    Tensor4 dp1 = rand_tensor(n, c, h, w, 1.0);
    Tensor4 dp2 = rand_tensor(n, c, h, w, 1.0);
    Tensor4 y = rand_tensor(n, c, h, w, 1.0);

    SadWeights weights;
    weights.att_h.weight = rand_tensor(c, c, 1, 3, 0.5);
    weights.att_h.ph = 0; weights.att_h.pw = 1;
    weights.att_v.weight = rand_tensor(c, c, 3, 1, 0.5);
    weights.att_v.ph = 1; weights.att_v.pw = 0;
    weights.out.weight = rand_tensor(c, c, 1, 1, 0.5);
    auto rand_bias = [&](int len) {
        std::vector<float> b(len);
        for (float& v : b) v = static_cast<float>(rng.uniform_in(-0.5, 0.5));
        return b;
    };
    weights.att_h.bias = rand_bias(c);
    weights.att_v.bias = rand_bias(c);
    weights.out.bias = rand_bias(c);

    SadCache cache;
    sad_forward(x, dp1, dp2, y, weights, &cache);
    const Tensor4 grad_out(n, c, h, w, 1.0f);
    const SadGrads grads = sad_backward(cache, grad_out, weights);

    const auto params = sad_pack_f64(x, dp1, dp2, y, weights);
    const auto analytic = sad_pack_grads_f64(grads);
    auto eval = [n, c, h, w](const std::vector<std::vector<double>>& p) {
        return sad_eval_sum_f64(p, n, c, h, w);
    };
    return finite_diff_check(eval, params, analytic, sad_param_names(), eps, 64, seed ^ 0xABCDEF);
}

} // namespace sanet
