#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sanet/tensor.hpp"

namespace sanet {

struct LossConfig {
    int32_t ignore = 255;
    double ohem_threshold = 0.7;
    // < 0 selects the default floor of pixels/16 at call time.
    int64_t ohem_min_kept = -1;
    double w_main = 1.0, w_aux = 0.4, w_boundary = 1.0;
};

// Mean of -log softmax at the true class over non-ignored pixels; 0 when
// every pixel is ignored.
double cross_entropy(const Tensor4& logits, const ClassMap& labels, int32_t ignore = 255);

// Keeps pixels whose true-class probability is below the threshold; tops up
// to the min-kept floor with the highest-loss pixels when too few qualify.
double ohem_cross_entropy(const Tensor4& logits, const ClassMap& labels, const LossConfig& cfg = {});

// 1 where any 4-neighbor carries a different non-ignored label; ignored
// pixels stay ignored and never influence neighbors.
ClassMap boundary_targets(const ClassMap& labels);

// Class-balanced binary cross-entropy: positives weighted by #neg/#pos
// (unweighted when no positives), mean over non-ignored pixels.
double boundary_loss(const Tensor4& boundary_logits, const ClassMap& targets);

double poly_lr(double base, int64_t iter, int64_t max_iter, double power = 0.9);

struct MiouResult {
    std::vector<double> per_class;
    std::vector<bool> present;
    double mean = 0.0;
};
// Confusion-matrix accumulator for dataset-level evaluation; miou() is the
// single-pair convenience wrapper over one add().
class MiouAccumulator {
public:
    explicit MiouAccumulator(int num_classes, int32_t ignore = 255);
    void add(const ClassMap& pred, const ClassMap& labels);
    MiouResult result() const;

private:
    int num_classes_;
    int32_t ignore_;
    std::vector<int64_t> confusion_;
};

MiouResult miou(const ClassMap& pred, const ClassMap& labels, int num_classes, int32_t ignore = 255);

struct GradCheckEntry {
    std::string name;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
};
struct GradCheckReport {
    std::vector<GradCheckEntry> per_tensor;
    double worst_abs = 0.0;
    double worst_rel = 0.0;
};

// Central differences on a random coordinate subsample per tensor, compared
// against the supplied analytic gradients.
GradCheckReport finite_diff_check(const std::function<double(const std::vector<std::vector<double>>&)>& eval_fn,
                                  const std::vector<std::vector<double>>& params,
                                  const std::vector<std::vector<double>>& analytic_grads,
                                  const std::vector<std::string>& names, double eps = 1e-3,
                                  int coords_per_tensor = 64, uint64_t seed = 1);

// Random attention-decoder instance at the given dims, analytic backward vs
// central differences on the sum-of-outputs objective.
GradCheckReport sad_gradient_check(uint64_t seed, int n = 1, int c = 4, int h = 6, int w = 6,
                                   double eps = 1e-3);

} // namespace sanet
