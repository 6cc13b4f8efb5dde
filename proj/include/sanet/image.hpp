#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "sanet/tensor.hpp"

namespace sanet {

// Binary netpbm I/O. P6 maps to a 1x3xHxW tensor in [0,1]; P5 grayscale is
// replicated to three channels so any image feeds the network directly.
Tensor4 read_image(const std::string& path);
void write_image(const Tensor4& img, const std::string& path);

// P5 where each gray value is a class id (255 = ignore).
ClassMap read_label_map(const std::string& path);
void write_label_map(const ClassMap& map, const std::string& path);

Tensor4 preprocess(const Tensor4& img, const std::array<float, 3>& mean = {0.485f, 0.456f, 0.406f},
                   const std::array<float, 3>& stddev = {0.229f, 0.224f, 0.225f});

struct Palette {
    std::map<int32_t, std::array<uint8_t, 3>> colors;
};

// Text file, one "class_id R G B" per line; '#' starts a comment.
Palette load_palette(const std::string& path);
// Evenly spaced hues, deterministic, for runs without a palette file.
Palette default_palette(int num_classes);

Tensor4 colorize(const ClassMap& map, const Palette& palette);

} // namespace sanet
