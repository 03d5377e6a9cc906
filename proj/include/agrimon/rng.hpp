#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace agrimon {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Per-pixel seed derivation shared by every strategy and by raster synthesis:
///
///   h = splitmix64(seed)
///   h = splitmix64(h ^ row)
///   h = splitmix64(h ^ (col + 0x632BE59BD9B4E019))
///
/// Row and column are parent-grid coordinates, so a pixel keeps its seed when
/// it is processed as part of any sub-region.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t row, std::uint64_t col) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ row);
    return splitmix64(h ^ (col + 0x632BE59BD9B4E019ULL));
}

/// The one random source used everywhere in the library. The engine comes
/// from the standard library; the variate conversions are written out so that
/// streams do not depend on the standard library's distribution classes.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Uses rejection to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    /// Standard normal by Box-Muller; one variate per call, the pair's twin is discarded.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Exponential with the given mean.
    double exponential(double mean) {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return -mean * std::log(u);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace agrimon
