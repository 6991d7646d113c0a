// SPDX-License-Identifier: Apache-2.0

#ifndef AEMMP_RNG_HPP
#define AEMMP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

#include "aemmp/complex_matrix.hpp"

namespace aemmp {

// Deterministic generator. All variate transforms are implemented on top of
// raw 64-bit draws so that a given seed reproduces identical streams across
// platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in (0, 1].
    double uniform01() {
        return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard real normal, Box-Muller (cosine branch), two draws per call.
    double gaussian() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 gen_;
};

// splitmix64 mix of a base seed and stream indices, for per-trial generators.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t x = base;
    for (std::uint64_t v : {a + 1, b + 1}) {
        x += 0x9e3779b97f4a7c15ull * v;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        x = z ^ (z >> 31);
    }
    return x;
}

// Circularly-symmetric complex Gaussian CN(mean, var); real and imaginary
// parts each have variance var/2. var == 0 returns the mean exactly.
inline cplx sample_cgaussian(cplx mean, double var, Rng& rng) {
    if (var < 0.0) throw std::invalid_argument("sample_cgaussian: negative variance");
    if (var == 0.0) return mean;
    const double u1 = rng.uniform01();
    const double u2 = rng.uniform01();
    const double radius = std::sqrt(-std::log(u1) * var);
    const double phase = 2.0 * std::numbers::pi * u2;
    return mean + cplx(radius * std::cos(phase), radius * std::sin(phase));
}

}  // namespace aemmp

#endif
