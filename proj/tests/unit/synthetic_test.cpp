#include "toirc/synthetic.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace toirc;

TEST(Synthetic, ManifestCoversTheGridWithBackgroundReferences)
{
    SyntheticOptions o;
    o.subjects = 3;
    o.repetitions = 2;
    const auto m = synthetic_manifest(o);
    EXPECT_EQ(m.size(), 3u * 6u * 2u);
    for (const auto& r : m.records) {
        if (is_in_place(r.key.action)) {
            ASSERT_TRUE(r.background_ref);
            EXPECT_TRUE(m.find(*r.background_ref));
            EXPECT_FALSE(is_in_place(r.background_ref->action));
        } else {
            EXPECT_FALSE(r.background_ref);
        }
    }
}

TEST(Synthetic, RenderingIsDeterministicAndInRange)
{
    SyntheticOptions o;
    const RecordKey k{2, Action::handwaving, Scenario::s1, 1};
    const auto a = render_sequence(k, o), b = render_sequence(k, o);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a.front().width, kFrameWidth);
    EXPECT_EQ(a.front().height, kFrameHeight);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].pixels, b[i].pixels);
    }
    for (double p : a[5].pixels) {
        ASSERT_GE(p, 0.0);
        ASSERT_LE(p, 1.0);
    }
}

TEST(Synthetic, LocomotionStartsOnAnEmptyBackground)
{
    SyntheticOptions o;
    const auto m = synthetic_manifest(o);
    const RecordKey k{1, Action::walking, Scenario::s1, 1};
    const auto frames = render_sequence(k, o);
    const auto kf = preprocess_frames(frames, frames.front(), PreprocessParams{});
    std::size_t fg = 0;
    for (const auto& f : kf.frames) {
        fg += f.count();
    }
    EXPECT_GT(fg, 2000u);
}

TEST(Synthetic, WritesAPgmDatasetThatLoadsBack)
{
    SyntheticOptions o;
    o.subjects = 1;
    o.repetitions = 1;
    const auto root = std::filesystem::temp_directory_path() / "toirc_synth";
    std::filesystem::remove_all(root);
    const auto manifest = write_synthetic_dataset(root, o);
    const auto m = load_manifest(manifest);
    ASSERT_EQ(m.size(), 6u);
    const auto frames = load_frames(m.records[0]);
    const auto direct = render_sequence(m.records[0].key, o);
    ASSERT_EQ(frames.size(), direct.size());
    for (std::size_t i = 0; i < frames[3].pixels.size(); ++i) {
        ASSERT_NEAR(frames[3].pixels[i], direct[3].pixels[i], 0.5 / 255.0 + 1e-12);
    }
}
