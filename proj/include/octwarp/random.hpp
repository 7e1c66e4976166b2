#pragma once

#include <cstdint>
#include <utility>

namespace octwarp {

/// SplitMix64 finalizer: a bijective 64-bit mixing function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Child seed for stream `index` of `base`:
///   mix64(base ^ mix64(index + 0x9E3779B97F4A7C15)).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(base ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

/// Seedable, platform-independent uniform generator (SplitMix64, Vigna 2015).
///
/// Every derived quantity (uniform doubles, bounded integers, normal pairs)
/// is defined purely in terms of next(), so a given seed yields the same
/// stream on every platform and in every language that implements the same
/// three lines of integer arithmetic.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform on [0, 1) with 53 bits of resolution: (next() >> 11) * 2^-53.
    double uniform() noexcept;

    /// Uniform on (0, 1]: ((next() >> 11) + 1) * 2^-53. Safe as a log argument.
    double uniform_positive() noexcept;

    /// Uniform integer in [0, bound) by rejection; bound must be > 0.
    std::uint64_t bounded(std::uint64_t bound) noexcept;

    /// Two independent standard-normal variates by Box–Muller.
    ///
    /// Draws u1 = uniform_positive() then u2 = uniform(), and returns
    /// (r cos 2πu2, r sin 2πu2) with r = sqrt(-2 ln u1).
    std::pair<double, double> normal_pair() noexcept;

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

} // namespace octwarp
