#include "toirc/preprocess.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace toirc;

namespace {

GrayFrame random_frame(int w, int h, std::uint64_t seed)
{
    CounterRng r(seed, 1);
    GrayFrame f(w, h);
    for (auto& p : f.pixels) {
        p = r.next_unit();
    }
    return f;
}

/// Direct 2-D convolution with the outer-product kernel and replicated borders.
GrayFrame dense_blur(const GrayFrame& f, double sigma)
{
    const int r = int(std::ceil(3.0 * sigma));
    std::vector<std::vector<double>> k(std::size_t(2 * r + 1), std::vector<double>(std::size_t(2 * r + 1)));
    double sum = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            k[std::size_t(dy + r)][std::size_t(dx + r)] = w;
            sum += w;
        }
    }
    GrayFrame out(f.width, f.height);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    acc += k[std::size_t(dy + r)][std::size_t(dx + r)] / sum *
                           f.at(std::clamp(x + dx, 0, f.width - 1), std::clamp(y + dy, 0, f.height - 1));
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

std::vector<GrayFrame> numbered(int n)
{
    std::vector<GrayFrame> v;
    for (int i = 0; i < n; ++i) {
        v.emplace_back(4, 3, double(i) / 1000.0);
    }
    return v;
}

} // namespace

TEST(Gaussian, KernelIsNormalizedAndSymmetric)
{
    const auto k = gaussian_kernel(2.0);
    ASSERT_EQ(k.size(), 13u);
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        s += k[i];
        EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
    }
    EXPECT_NEAR(s, 1.0, 1e-15);
    EXPECT_THROW(gaussian_kernel(0.0), UsageError);
}

TEST(Gaussian, SeparableMatchesDenseConvolution)
{
    for (double sigma : {0.7, 2.0}) {
        const auto f = random_frame(37, 23, 4);
        const auto a = gaussian_smooth(f, sigma);
        const auto b = dense_blur(f, sigma);
        for (std::size_t i = 0; i < a.pixels.size(); ++i) {
            ASSERT_NEAR(a.pixels[i], b.pixels[i], 1e-12) << "sigma " << sigma << " pixel " << i;
        }
    }
}

TEST(Gaussian, ConstantFrameIsFixed)
{
    const GrayFrame f(20, 10, 0.37);
    const auto g = gaussian_smooth(f, 2.0);
    for (double p : g.pixels) {
        EXPECT_NEAR(p, 0.37, 1e-14);
    }
}

TEST(Subsample, CentersTheKeptFrames)
{
    // 100 frames, factor 3: kept 0,3,...,99 (34 frames), start (34-10)/2 = 12.
    const auto seq = numbered(100);
    const auto s = subsample_keyframes(seq, 3);
    ASSERT_EQ(s.frames.size(), 10u);
    EXPECT_EQ(s.pad_count, 0);
    for (int i = 0; i < 10; ++i) {
        EXPECT_DOUBLE_EQ(s.frames[std::size_t(i)].pixels[0], double(3 * (12 + i)) / 1000.0);
    }
}

TEST(Subsample, ShortSequencesArePaddedAtTheFront)
{
    const auto seq = numbered(20); // kept 0,3,...,18: 7 frames
    const auto s = subsample_keyframes(seq, 3);
    EXPECT_EQ(s.pad_count, 3);
    EXPECT_DOUBLE_EQ(s.frames[2].pixels[0], 0.0);
    EXPECT_DOUBLE_EQ(s.frames[3].pixels[0], 0.0);
    EXPECT_DOUBLE_EQ(s.frames[9].pixels[0], 18.0 / 1000.0);
    EXPECT_THROW(subsample_keyframes(std::span<const GrayFrame>{}, 3), DataError);
}

TEST(Blobs, SmallComponentsRemovedUnderBothConnectivities)
{
    BinaryFrame b(10, 10);
    // Diagonal pair: two 4-components of size 1, one 8-component of size 2.
    b.at(1, 1) = 1;
    b.at(2, 2) = 1;
    // A 3x3 square.
    for (int y = 5; y < 8; ++y) {
        for (int x = 5; x < 8; ++x) {
            b.at(x, y) = 1;
        }
    }
    auto four = b;
    remove_small_blobs(four, 1, 4);
    EXPECT_FALSE(four.at(1, 1));
    EXPECT_EQ(four.count(), 9u);
    auto eight = b;
    remove_small_blobs(eight, 1, 8);
    EXPECT_TRUE(eight.at(1, 1));
    EXPECT_EQ(eight.count(), 11u);
    auto big = b;
    remove_small_blobs(big, 9, 8);
    EXPECT_EQ(big.count(), 0u);
}

TEST(Silhouette, ThresholdIsStrict)
{
    GrayFrame bg(4, 1, 0.5), f(4, 1, 0.5);
    f.pixels = {0.5, 0.75, 0.8, 0.2};
    const auto s = segment_silhouette(f, bg, 0.25, 0);
    EXPECT_FALSE(s.at(0, 0));
    EXPECT_FALSE(s.at(1, 0));
    EXPECT_TRUE(s.at(2, 0));
    EXPECT_TRUE(s.at(3, 0));
    EXPECT_THROW(segment_silhouette(f, GrayFrame(3, 1), 0.1, 0), DataError);
}

TEST(Silhouette, CenteringMovesFirstPeakColumnToTheMiddle)
{
    BinaryFrame b(20, 6);
    for (int y = 0; y < 4; ++y) {
        b.at(3, y) = 1;
        b.at(9, y) = 1; // tie with column 3, first wins
    }
    b.at(4, 0) = 1;
    const auto c = center_silhouette(b);
    EXPECT_EQ(c.count(), b.count());
    for (int y = 0; y < 4; ++y) {
        EXPECT_TRUE(c.at(10, y));
        EXPECT_TRUE(c.at(16, y));
    }
    EXPECT_TRUE(c.at(11, 0));
    const BinaryFrame empty(20, 6);
    EXPECT_EQ(center_silhouette(empty), empty);
}

TEST(Silhouette, EndToEndOnASyntheticSquare)
{
    std::vector<GrayFrame> frames;
    const GrayFrame bg(160, 120, 0.2);
    for (int i = 0; i < 40; ++i) {
        GrayFrame f = bg;
        for (int y = 40; y < 80; ++y) {
            for (int x = 20 + i; x < 40 + i; ++x) {
                f.at(x, y) = 0.9;
            }
        }
        frames.push_back(f);
    }
    const auto k = preprocess_frames(frames, bg, PreprocessParams{});
    ASSERT_EQ(k.frames.size(), 10u);
    EXPECT_EQ(k.pad_count, 0);
    for (const auto& b : k.frames) {
        EXPECT_GT(b.count(), 400u);
        EXPECT_TRUE(b.at(80, 60));
    }
}

TEST(KeyframeCache, RoundTrips)
{
    KeyframeSet k;
    k.pad_count = 2;
    CounterRng r(5, 5);
    for (int i = 0; i < 10; ++i) {
        BinaryFrame b(13, 7);
        for (auto& m : b.mask) {
            m = r.next_unit() < 0.3 ? 1 : 0;
        }
        k.frames.push_back(b);
    }
    const auto path = std::filesystem::temp_directory_path() / "toirc_roundtrip.kf";
    write_keyframes(path, k);
    const auto back = read_keyframes(path);
    EXPECT_EQ(back.pad_count, 2);
    ASSERT_EQ(back.frames.size(), 10u);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(back.frames[std::size_t(i)], k.frames[std::size_t(i)]);
    }
}
