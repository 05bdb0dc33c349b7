#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lsf {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * Counter-based 64-bit generator: the n-th output of a stream is
 * splitmix64_mix(key + (n + 1) * golden_gamma), so any position of any
 * stream can be computed without touching the others.
 *
 * Streams are keyed by (seed, substream). Normal deviates use the basic
 * Box-Muller transform on 53-bit uniforms; std::normal_distribution is
 * avoided because its output differs between standard libraries.
 */
class CounterRng {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    explicit CounterRng(std::uint64_t seed, std::uint64_t substream = 0) noexcept
        : key_(splitmix64_mix(seed ^ splitmix64_mix(substream + kGamma))) {}

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return splitmix64_mix(key_ + counter_ * kGamma);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lsf
