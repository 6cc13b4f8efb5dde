#pragma once

#include <array>
#include <string>
#include <vector>

#include "sanet/apppm.hpp"
#include "sanet/blocks.hpp"
#include "sanet/sad.hpp"
#include "sanet/stf.hpp"

namespace sanet {

// Stage order everywhere: stem, l1..l6, then the pyramid/decoder widths.
struct ModelConfig {
    char variant = 'S';
    int num_classes = 19;
    std::array<int, 7> repeats = {1, 2, 2, 2, 2, 2, 1};
    std::array<int, 7> channels = {32, 32, 64, 128, 128, 256, 512};
    int dp_dil1 = 2, dp_dil2 = 4;
    ApppmConfig apppm;
    int decoder_c = 128;
    int head_mid = 128;
    int aux_mid = 128;
    int boundary_mid = 64;
};

// variant: 's' or 'm' (case-insensitive).
ModelConfig make_config(char variant, int num_classes = 19);

// Recover variant and class count from the tensors a weight file holds.
ModelConfig config_from_store(const WeightStore& store);

struct Model {
    ModelConfig cfg;
    Stem stem;
    std::vector<BasicBlock> l1, l2, l3, l4, l5;
    BottleneckBlock l6;
    DilatedPath dp;
    Apppm apppm;
    SadWeights sad;
    Head head, aux_head, boundary_head;
};

WeightStore init_weights(const ModelConfig& cfg, uint64_t seed);
Model build(const ModelConfig& cfg, const WeightStore& store);
// Every conv weight a small positive constant, BN neutral: monotone network
// for impulse-support probing.
Model build_surrogate(const ModelConfig& cfg, float weight_value = 0.05f);

void fold_model(Model& m);

Tensor4 forward(const Model& m, const Tensor4& img);

struct TrainOutputs {
    Tensor4 main, aux, boundary;
};
TrainOutputs forward_train(const Model& m, const Tensor4& img);

// Averaged full-resolution class probabilities over rescaled forwards.
Tensor4 multi_scale_infer(const Model& m, const Tensor4& img, const std::vector<double>& scales);

struct StageRecord {
    std::string name;
    int c = 0, h = 0, w = 0;
    int reduction = 1;
    uint64_t params = 0;
    int rf = 1;
};
struct LayerReport {
    std::vector<StageRecord> stages;
    uint64_t total_params = 0;
};
LayerReport describe(const ModelConfig& cfg, const WeightStore& store, int in_h, int in_w);
std::string format_report(const LayerReport& report);

} // namespace sanet
