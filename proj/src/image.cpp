#include "sanet/image.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "sanet/error.hpp"

namespace sanet {

namespace {

struct PnmHeader {
    bool color = false;
    int w = 0, h = 0;
};

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("image: cannot open: " + path);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Parses "P5"/"P6", dimensions, and maxval; leaves pos at the first payload byte.
PnmHeader parse_pnm_header(const std::vector<uint8_t>& bytes, size_t& pos) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError("image: not a binary P5/P6 file");
    PnmHeader hdr;
    hdr.color = bytes[1] == '6';
    pos = 2;
    auto next_int = [&]() -> int {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError("image: malformed header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 20) throw FormatError("image: malformed header");
            ++pos;
        }
        return static_cast<int>(v);
    };
    hdr.w = next_int();
    hdr.h = next_int();
    const int maxval = next_int();
    if (maxval != 255) throw FormatError("image: wrong maxval (only 255 supported)");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("image: malformed header");
    ++pos;
    if (hdr.w <= 0 || hdr.h <= 0) throw FormatError("image: malformed header");
    return hdr;
}

uint8_t to_byte(float v) {
    if (v < 0.0f) v = 0.0f;
    if (v > 1.0f) v = 1.0f;
    return static_cast<uint8_t>(std::lround(v * 255.0f));
}

} // namespace

Tensor4 read_image(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file(path);
    size_t pos = 0;
    const PnmHeader hdr = parse_pnm_header(bytes, pos);
    const size_t pixels = static_cast<size_t>(hdr.w) * hdr.h;
    const size_t needed = pixels * (hdr.color ? 3 : 1);
    if (bytes.size() - pos < needed) throw FormatError("image: truncated pixel data");
    Tensor4 img(1, 3, hdr.h, hdr.w);
    constexpr float scale = 1.0f / 255.0f;
    if (hdr.color) {
        for (size_t p = 0; p < pixels; ++p)
            for (int ci = 0; ci < 3; ++ci) img.plane(0, ci)[p] = bytes[pos + 3 * p + ci] * scale;
    } else {
        for (size_t p = 0; p < pixels; ++p) {
            const float v = bytes[pos + p] * scale;
            img.plane(0, 0)[p] = v;
            img.plane(0, 1)[p] = v;
            img.plane(0, 2)[p] = v;
        }
    }
    return img;
}

void write_image(const Tensor4& img, const std::string& path) {
    if (img.n != 1 || img.c != 3) throw ShapeError("write_image: expected 1x3xHxW, got " + img.dims_str());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("image: cannot open for writing: " + path);
    f << "P6\n" << img.w << " " << img.h << "\n255\n";
    const size_t pixels = static_cast<size_t>(img.h) * img.w;
    std::vector<uint8_t> row(pixels * 3);
    for (size_t p = 0; p < pixels; ++p)
        for (int ci = 0; ci < 3; ++ci) row[3 * p + ci] = to_byte(img.plane(0, ci)[p]);
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!f) throw Error("image: write failed: " + path);
}

ClassMap read_label_map(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file(path);
    size_t pos = 0;
    const PnmHeader hdr = parse_pnm_header(bytes, pos);
    if (hdr.color) throw FormatError("image: label map must be P5 grayscale: " + path);
    const size_t pixels = static_cast<size_t>(hdr.w) * hdr.h;
    if (bytes.size() - pos < pixels) throw FormatError("image: truncated pixel data");
    ClassMap map(hdr.h, hdr.w);
    for (size_t p = 0; p < pixels; ++p) map.data[p] = bytes[pos + p];
    return map;
}

void write_label_map(const ClassMap& map, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("image: cannot open for writing: " + path);
    f << "P5\n" << map.w << " " << map.h << "\n255\n";
    std::vector<uint8_t> row(map.data.size());
    for (size_t p = 0; p < map.data.size(); ++p) {
        const int32_t v = map.data[p];
        if (v < 0 || v > 255) throw ValueError("write_label_map: class id " + std::to_string(v) + " outside byte range");
        row[p] = static_cast<uint8_t>(v);
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!f) throw Error("image: write failed: " + path);
}

Tensor4 preprocess(const Tensor4& img, const std::array<float, 3>& mean, const std::array<float, 3>& stddev) {
    if (img.c != 3) throw ShapeError("preprocess: expected 3 channels, got " + img.dims_str());
    Tensor4 out(img.n, img.c, img.h, img.w);
    const size_t plane = static_cast<size_t>(img.h) * img.w;
    for (int ni = 0; ni < img.n; ++ni)
        for (int ci = 0; ci < 3; ++ci) {
            const float m = mean[ci];
            const float inv = 1.0f / stddev[ci];
            const float* src = img.plane(ni, ci);
            float* dst = out.plane(ni, ci);
            for (size_t p = 0; p < plane; ++p) dst[p] = (src[p] - m) * inv;
        }
    return out;
}

Palette load_palette(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("palette: cannot open: " + path);
    Palette pal;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream is(line);
        long id, r, g, b;
        if (!(is >> id)) continue;
        if (!(is >> r >> g >> b) || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255 || id < 0)
            throw FormatError("palette: malformed line " + std::to_string(lineno) + " in " + path);
        pal.colors[static_cast<int32_t>(id)] = {static_cast<uint8_t>(r), static_cast<uint8_t>(g),
                                                static_cast<uint8_t>(b)};
    }
    return pal;
}

Palette default_palette(int num_classes) {
    Palette pal;
    for (int k = 0; k < num_classes; ++k) {
        const double hue = std::fmod(k * 137.50776405003785, 360.0);
        const double s = 0.7, v = 0.95;
        const double c = v * s;
        const double hp = hue / 60.0;
        const double m = v - c;
        const double x2 = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
        double r = 0, g = 0, b = 0;
        switch (static_cast<int>(hp)) {
            case 0: r = c; g = x2; break;
            case 1: r = x2; g = c; break;
            case 2: g = c; b = x2; break;
            case 3: g = x2; b = c; break;
            case 4: r = x2; b = c; break;
            default: r = c; b = x2; break;
        }
        pal.colors[k] = {static_cast<uint8_t>(std::lround((r + m) * 255.0)),
                         static_cast<uint8_t>(std::lround((g + m) * 255.0)),
                         static_cast<uint8_t>(std::lround((b + m) * 255.0))};
    }
    return pal;
}

Tensor4 colorize(const ClassMap& map, const Palette& palette) {
    Tensor4 img(1, 3, map.h, map.w);
    constexpr float scale = 1.0f / 255.0f;
    for (size_t p = 0; p < map.data.size(); ++p) {
        const int32_t id = map.data[p];
        if (id == map.ignore_value) continue;
        auto it = palette.colors.find(id);
        if (it == palette.colors.end())
            throw ValueError("colorize: class " + std::to_string(id) + " has no palette entry");
        img.plane(0, 0)[p] = it->second[0] * scale;
        img.plane(0, 1)[p] = it->second[1] * scale;
        img.plane(0, 2)[p] = it->second[2] * scale;
    }
    return img;
}

} // namespace sanet
