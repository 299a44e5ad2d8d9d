#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// Every draw is a pure function of (key, counter), so masks, shuffles and
// completion choices are reproducible across platforms and independent of
// evaluation order. The round constants and multipliers are the published
// Random123 values; see tests/unit/test_random.cpp for the known-answer vectors.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

namespace toirc {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept
{
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Stream of uniform draws keyed by a 64-bit seed and a 32-bit stream tag.
///
/// Draw i of a stream is philox(counter = (lo(i), hi(i), tag, 0), key = seed)
/// with the first two output words combined into 64 bits.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint32_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream)
    {
    }

    /// 64 random bits for an absolute draw index; does not advance the stream.
    std::uint64_t bits_at(std::uint64_t index) const noexcept
    {
        const PhiloxCounter out = philox4x32_10(
            {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream_, 0u}, key_);
        return (std::uint64_t{out[1]} << 32) | out[0];
    }

    std::uint64_t next_bits() noexcept { return bits_at(position_++); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double next_unit() noexcept { return static_cast<double>(next_bits() >> 11) * 0x1.0p-53; }

    /// Uniform in [-1, 1).
    double next_symmetric() noexcept { return 2.0 * next_unit() - 1.0; }

    /// Uniform integer in [0, bound) by rejection, bound > 0.
    std::uint64_t next_below(std::uint64_t bound) noexcept
    {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t r;
        do {
            r = next_bits();
        } while (r >= limit);
        return r % bound;
    }

    /// Standard normal via Box-Muller (one value per two draws).
    double next_normal() noexcept;

    std::uint64_t position() const noexcept { return position_; }

private:
    PhiloxKey key_;
    std::uint32_t stream_;
    std::uint64_t position_ = 0;
};

inline double CounterRng::next_normal() noexcept
{
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    double u1 = next_unit();
    while (u1 <= 0.0) {
        u1 = next_unit();
    }
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Fisher-Yates shuffle driven by a CounterRng.
template <typename T>
void shuffle(std::span<T> values, CounterRng& rng) noexcept
{
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(values[i - 1], values[j]);
    }
}

/// Named stream tags so that unrelated consumers of one seed never share draws.
namespace streams {
inline constexpr std::uint32_t input_mask = 0x4D41534Bu;  // "MASK"
inline constexpr std::uint32_t completion = 0x434F4D50u;  // "COMP"
inline constexpr std::uint32_t folds = 0x464F4C44u;       // "FOLD"
inline constexpr std::uint32_t gp_starts = 0x47505354u;   // "GPST"
inline constexpr std::uint32_t acquisition = 0x41435155u; // "ACQU"
inline constexpr std::uint32_t synthetic = 0x53594E54u;   // "SYNT"
} // namespace streams

} // namespace toirc
