// rng.hpp: counter-based normal deviates.
//
// Draw i under key k is SplitMix64's finalizer applied to k + (i + 1) * 0x9E3779B97F4A7C15,
// mapped to a double in [0, 1) from its top 53 bits. Normal deviate j comes
// from the Box-Muller pair built on draws 2*(j/2) and 2*(j/2)+1 (cosine branch
// for even j, sine branch for odd j). Every value depends only on (key, index).

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ethbath {

class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t i) const { return mix(key_ + (i + 1) * 0x9E3779B97F4A7C15ULL); }

    double uniform(std::uint64_t i) const { return static_cast<double>(bits(i) >> 11) * 0x1.0p-53; }

    double normal(std::uint64_t j) const {
        const std::uint64_t pair = j / 2;
        const double u1 = 1.0 - uniform(2 * pair); // (0, 1]
        const double u2 = uniform(2 * pair + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        return (j % 2 == 0) ? r * std::cos(phi) : r * std::sin(phi);
    }

private:
    std::uint64_t key_;
};

} // namespace ethbath
