#pragma once

// Counter-based stream derivation on top of xoshiro256++.
//
// Every Monte-Carlo trial draws from its own generator, keyed by
// (master seed, trial index). The mapping is a pure function, so a run
// partitioned over any number of workers consumes exactly the same numbers
// as a serial run.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace hsc {

/// SplitMix64 output function (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256pp(std::uint64_t seed) noexcept : s_{} {
        std::uint64_t x = seed;
        for (auto& word : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            word = mix64(x);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in the open interval (0, 1), 53 bits of resolution.
    constexpr double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_;
};

/// Generator for stream `index` under `seed`.
constexpr Xoshiro256pp make_stream(std::uint64_t seed, std::uint64_t index) noexcept {
    return Xoshiro256pp(mix64(mix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL)));
}

/// Exp(rate) draw by inversion; strictly positive and finite.
template <class Rng>
double sample_exponential(double rate, Rng& rng) {
    return -std::log(rng.uniform()) / rate;
}

}  // namespace hsc
