#pragma once
//
// Seedable, splittable 64-bit generator. Streams are derived from
// (master seed, replica, trajectory) by SplitMix64 hashing, so any replica
// can be regenerated independently of how work is scheduled.
//

#include <array>
#include <cstdint>
#include <limits>

namespace rilab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// xoshiro256** (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    /// Stream for (seed, replica, trajectory).
    static Rng stream(std::uint64_t seed, std::uint64_t replica, std::uint64_t trajectory = 0) {
        std::uint64_t st = seed;
        std::uint64_t a = splitmix64(st);
        st ^= replica * 0xD1B54A32D192ED03ull;
        std::uint64_t b = splitmix64(st);
        st ^= trajectory * 0x8CB92BA72F3D8DD7ull;
        std::uint64_t c = splitmix64(st);
        return Rng(a ^ (b << 1) ^ (c << 2) ^ c);
    }

    void reseed(std::uint64_t seed) {
        std::uint64_t st = seed;
        for (auto& w : s_) w = splitmix64(st);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
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

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift; bias < n / 2^64, irrelevant at our n
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

    /// Independent child stream (jump-free split by hashing the current state).
    Rng split() {
        std::uint64_t st = (*this)() ^ 0xA0761D6478BD642Full;
        return Rng(splitmix64(st));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
};

} // namespace rilab
