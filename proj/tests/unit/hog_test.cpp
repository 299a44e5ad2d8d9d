#include "toirc/hog.hpp"

#include "../common/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace toirc;

namespace {

BinaryFrame random_silhouette(std::uint64_t seed, double fill)
{
    CounterRng r(seed, 3);
    BinaryFrame b(kFrameWidth, kFrameHeight);
    for (auto& m : b.mask) {
        m = r.next_unit() < fill ? 1 : 0;
    }
    return b;
}

} // namespace

TEST(Hog, DescriptorLengthForFullFrames)
{
    const HogParams p;
    EXPECT_EQ(p.length(kFrameWidth, kFrameHeight), 9576);
    EXPECT_EQ(hog(BinaryFrame(kFrameWidth, kFrameHeight)).size(), 9576u);
}

TEST(Hog, EmptyFrameGivesZeros)
{
    for (double v : hog(BinaryFrame(kFrameWidth, kFrameHeight))) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Hog, MatchesNaiveOracleOnRandomFrames)
{
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto b = random_silhouette(s, 0.05 + 0.09 * double(s));
        const auto got = hog(b);
        const auto want = oracle::hog(b);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            ASSERT_NEAR(got[i], want[i], 1e-9) << "frame " << s << " entry " << i;
        }
    }
}

TEST(Hog, BlocksAreUnitNormOrZero)
{
    const auto h = hog(random_silhouette(3, 0.2));
    for (std::size_t b = 0; b < h.size(); b += 36) {
        double n2 = 0.0;
        for (std::size_t i = b; i < b + 36; ++i) {
            n2 += h[i] * h[i];
        }
        if (n2 > 0.0) {
            EXPECT_NEAR(n2, 1.0, 1e-9);
        }
    }
}

TEST(Hog, VerticalEdgeVotesIntoBinZero)
{
    // Left half foreground: gradient points along -x, orientation 0 mod 180.
    BinaryFrame b(16, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 8; ++x) {
            b.at(x, y) = 1;
        }
    }
    HogParams p;
    const auto h = hog(b, p);
    ASSERT_EQ(h.size(), 36u);
    double bin0 = 0.0, rest = 0.0;
    for (int c = 0; c < 4; ++c) {
        for (int k = 0; k < 9; ++k) {
            (k == 0 ? bin0 : rest) += h[std::size_t(c * 9 + k)];
        }
    }
    EXPECT_GT(bin0, 0.0);
    EXPECT_EQ(rest, 0.0);
}

TEST(Hog, RejectsTinyFrames)
{
    EXPECT_THROW(hog(BinaryFrame(8, 8)), DataError);
    HogParams p;
    p.bins = 1;
    EXPECT_THROW(hog(BinaryFrame(16, 16), p), UsageError);
}
