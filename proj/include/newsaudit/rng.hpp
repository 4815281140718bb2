#pragma once

#include <cstdint>

namespace newsaudit {

// Counter-based generator with a fixed bit-exact output stream on every
// platform. Standard-library distributions are implementation-defined, so
// anything that must be reproducible (weight init, stub providers) draws
// from this instead.
struct SplitMix64 {
    std::uint64_t state;

    explicit constexpr SplitMix64(std::uint64_t seed) : state(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [-1, 1).
    double next_symmetric() { return next_unit() * 2.0 - 1.0; }

    // Uniform in [-scale, scale).
    double next_uniform(double scale) { return next_symmetric() * scale; }

    // Modulo bias is irrelevant at the ranges used here.
    std::uint64_t next_below(std::uint64_t n) { return n ? next() % n : 0; }
};

}  // namespace newsaudit
