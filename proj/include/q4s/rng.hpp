#pragma once

// Seeded random source shared by string generation and the channel simulator.
//
// The generator is xoshiro256** seeded through splitmix64, and every derived
// distribution below is written out explicitly. Standard-library distributions
// are implementation defined, so golden vectors produced with them would not
// survive a change of toolchain.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace q4s {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Stateless hash of (seed, counter); used for per-index payload symbols.
inline std::uint64_t hash64(std::uint64_t seed, std::uint64_t counter) noexcept {
    std::uint64_t s = seed ^ (counter * 0xD1B54A32D192ED03ull);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [-1, 1).
    double uniform_pm1() noexcept { return 2.0 * uniform01() - 1.0; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire's multiply-shift with rejection.
        __uint128_t m = static_cast<__uint128_t>(next()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<__uint128_t>(next()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    /// Standard normal via Box-Muller (one variate per call, two uniforms consumed).
    double normal() noexcept {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Exponential with the given rate.
    double exponential(double rate) noexcept { return -std::log(1.0 - uniform01()) / rate; }

    /// Number of failures before the first success of a Bernoulli(p) sequence.
    std::uint64_t geometric(double p) noexcept {
        if (p >= 1.0) return 0;
        const double g = std::floor(std::log(1.0 - uniform01()) / std::log1p(-p));
        return g >= 9.0e18 ? static_cast<std::uint64_t>(9.0e18) : static_cast<std::uint64_t>(g);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

} // namespace q4s
