#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace scan3d {

/// SplitMix64 step; used for seeding and for hashing stream coordinates.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    return splitmix64(x);
}

/**
 * xoshiro256** generator (Blackman & Vigna). Satisfies
 * UniformRandomBitGenerator so it also plugs into <random> distributions.
 *
 * Streams are addressed by (master seed, stream id, substream index): every
 * Monte Carlo iteration owns one substream, which makes results independent of
 * how iterations are distributed across worker threads.
 */
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed = 0) noexcept { reseed(seed); }

    RandomStream(std::uint64_t master, std::uint64_t stream, std::uint64_t index) noexcept
    {
        std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ULL);
        h = mix64(h ^ (stream + 0xbb67ae8584caa73bULL));
        h = mix64(h ^ (index + 0x3c6ef372fe94f82bULL));
        reseed(h);
    }

    void reseed(std::uint64_t seed) noexcept
    {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
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
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1].
    double uniform_open0() noexcept { return 1.0 - uniform(); }

    /// Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t bound) noexcept
    {
        __uint128_t m = static_cast<__uint128_t>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<__uint128_t>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

/// Stream ids used to keep unrelated simulations on disjoint substreams.
namespace streams {
inline constexpr std::uint64_t kFieldSampling = 1;
inline constexpr std::uint64_t kNaiveScan = 2;
inline constexpr std::uint64_t kImportanceBase = 1000;
} // namespace streams

} // namespace scan3d
