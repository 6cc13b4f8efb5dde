#pragma once

#include <cstdint>
#include <string_view>

namespace sanet {

/// SplitMix64 generator with the standard published constants. Used wherever
/// the engine needs reproducible, platform-independent random streams
/// (weight init, synthetic bench inputs, test fixtures).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform double in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform float in [lo, hi)
    float uniform_in(float lo, float hi) {
        return static_cast<float>(lo + (static_cast<double>(hi) - lo) * uniform());
    }

private:
    uint64_t state_;
};

// one SplitMix64 step applied to x; used to derive per-tensor subseeds
inline uint64_t splitmix64_mix(uint64_t x) { return SplitMix64(x).next(); }

// FNV-1a 64-bit with the standard offset basis and prime
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace sanet
