#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "gppp/error.hpp"

namespace gppp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; mixes a base seed with a tag into an independent stream seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Per-lambda chain seed: hash of the base seed and the bit pattern of lambda.
inline std::uint64_t lambda_seed(std::uint64_t base, double lambda) {
    return mix_seed(base, std::bit_cast<std::uint64_t>(lambda));
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
inline double uniform_open(Rng& rng) {
    for (;;) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

/// Symmetric alpha-stable variate S(alpha, 0, scale, location) by the
/// Chambers-Mallows-Stuck transform. At alpha = 2 this is Normal(location,
/// 2 scale^2).
inline double draw_stable(double alpha, double scale, double location, Rng& rng) {
    if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("stable exponent must lie in (1, 2]");
    if (!(scale > 0.0)) throw ConfigError("stable scale must be positive");
    const double v = std::numbers::pi * (uniform_open(rng) - 0.5);
    const double w = -std::log(uniform_open(rng));
    const double x = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
                     std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
    return location + scale * x;
}

}  // namespace gppp
