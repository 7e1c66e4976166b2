#include "octwarp/random.hpp"

#include <cmath>
#include <numbers>

namespace octwarp {

namespace {
constexpr double kTwoPowMinus53 = 1.0 / 9007199254740992.0;
}

double SplitMix64::uniform() noexcept {
    return static_cast<double>(next() >> 11) * kTwoPowMinus53;
}

double SplitMix64::uniform_positive() noexcept {
    return static_cast<double>((next() >> 11) + 1) * kTwoPowMinus53;
}

std::uint64_t SplitMix64::bounded(std::uint64_t bound) noexcept {
    // Reject the low residue class so every value is equally likely.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next();
        if (r >= threshold) return r % bound;
    }
}

std::pair<double, double> SplitMix64::normal_pair() noexcept {
    const double u1 = uniform_positive();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

} // namespace octwarp
