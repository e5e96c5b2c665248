#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

#include "bicluster/errors.hpp"

namespace bicluster {

/// SplitMix64 step. Used both as a seed mixer and to decorrelate derived seeds.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a base seed and a list of stream identifiers.
/// The chain is order-sensitive: derive_seed(s, {a, b}) != derive_seed(s, {b, a}).
/// Adding new identifiers never changes seeds derived from other identifier lists.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

/// Deterministic random stream: std::mt19937_64 with fixed output mappings,
/// so identical seeds give bit-identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [-bound, bound).
    double symmetric_uniform(double bound) { return bound * (2.0 * uniform01() - 1.0); }

    /// Mean-zero Gaussian via Box-Muller; the spare draw is cached.
    double gaussian(double sigma) {
        if (has_spare_) {
            has_spare_ = false;
            return sigma * spare_;
        }
        double u1 = 1.0 - uniform01(); // (0, 1], keeps log() finite
        double u2 = uniform01();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return sigma * radius * std::cos(angle);
    }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw ParameterError("Rng::index: n must be positive");
        auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace bicluster
