#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace sqdn {

/// SplitMix64 (Steele, Lea, Flood 2014). Used to expand a 64-bit seed into
/// generator state and to derive per-replication seeds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman, Vigna), state seeded from SplitMix64(seed).
/// Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
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

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

/// Randomness consumed by the simulator. The seeded implementation derives
/// every draw from Xoshiro256 with fixed transforms (no std distributions), so
/// a seed produces the same stream with any standard library.
class RandomSource {
public:
    virtual ~RandomSource() = default;

    /// Uniform on [0, 1).
    virtual double uniform() = 0;
    /// Uniform on {0, ..., n-1}; n >= 1.
    virtual std::size_t index(std::size_t n) = 0;
    /// Exponential with the given rate.
    virtual double exponential(double rate) = 0;
};

class SeededSource final : public RandomSource {
public:
    explicit SeededSource(std::uint64_t seed) : gen_(seed) {}

    double uniform() override { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Lemire's nearly-divisionless bounded integer.
    std::size_t index(std::size_t n) override {
        const auto range = static_cast<std::uint64_t>(n);
        unsigned __int128 m = static_cast<unsigned __int128>(gen_()) * range;
        auto low = static_cast<std::uint64_t>(m);
        if (low < range) {
            const std::uint64_t threshold = (0 - range) % range;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(gen_()) * range;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::size_t>(m >> 64);
    }

    double exponential(double rate) override { return -std::log1p(-uniform()) / rate; }

private:
    Xoshiro256 gen_;
};

/// Seed of replication r in a seed ladder rooted at base.
inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t r) {
    return base + r;
}

}  // namespace sqdn
