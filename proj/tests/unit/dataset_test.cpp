#include "toirc/dataset.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace toirc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("toirc_dataset_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

DatasetManifest grid(int subjects, int reps, std::vector<Scenario> scenarios)
{
    DatasetManifest m;
    for (auto sc : scenarios) {
        for (int s = 1; s <= subjects; ++s) {
            for (int a = 0; a < kClasses; ++a) {
                for (int r = 1; r <= reps; ++r) {
                    VideoRecord rec;
                    rec.key = {s, Action(a), sc, r};
                    rec.frame_dir = rec.id();
                    m.records.push_back(rec);
                }
            }
        }
    }
    m.sort();
    return m;
}

} // namespace

TEST(RecordId, RoundTrips)
{
    const RecordKey k{3, Action::running, Scenario::s2, 1};
    EXPECT_EQ(k.id(), "p03_running_s2_r1");
    const auto back = parse_record_id(k.id());
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, k);
    EXPECT_FALSE(parse_record_id("p03_flying_s2_r1"));
    EXPECT_FALSE(parse_record_id("p03_running_s2"));
}

TEST(RecordKey, LabelsFollowAlphabeticalClassOrder)
{
    EXPECT_EQ(int(Action::boxing), 0);
    EXPECT_EQ(int(Action::walking), 5);
    EXPECT_TRUE(is_in_place(Action::handwaving));
    EXPECT_FALSE(is_in_place(Action::jogging));
}

TEST(Manifest, LoadsResolvesAndWritesBack)
{
    const auto dir = scratch("load");
    {
        std::ofstream out(dir / "manifest.tsv");
        out << "# subject\taction\tscenario\trepetition\tframe_dir\tbackground_ref\n"
            << "2\twalking\ts1\t1\tframes/a\t-\n"
            << "1\tboxing\ts1\t2\tframes/b\tp02_walking_s1_r1\n";
    }
    ManifestOptions o;
    o.check_frames = false;
    const auto m = load_manifest(dir / "manifest.tsv", o);
    ASSERT_EQ(m.size(), 2u);
    // Sorted into (scenario, subject, action, repetition) order.
    EXPECT_EQ(m.records[0].id(), "p01_boxing_s1_r2");
    EXPECT_EQ(m.records[0].frame_dir, dir / "frames/b");
    ASSERT_TRUE(m.records[0].background_ref);
    EXPECT_EQ(m.records[0].background_ref->id(), "p02_walking_s1_r1");
    EXPECT_FALSE(m.records[1].background_ref);

    write_manifest(dir / "copy.tsv", m);
    const auto again = load_manifest(dir / "copy.tsv", o);
    ASSERT_EQ(again.size(), 2u);
    EXPECT_EQ(again.records[1].id(), m.records[1].id());
    EXPECT_EQ(again.records[1].frame_dir, m.records[1].frame_dir);
}

TEST(Manifest, RejectsMalformedRows)
{
    const auto dir = scratch("bad");
    ManifestOptions o;
    o.check_frames = false;
    {
        std::ofstream out(dir / "m.tsv");
        out << "1\tflying\ts1\t1\tx\t-\n";
    }
    EXPECT_THROW(load_manifest(dir / "m.tsv", o), DataError);
    {
        std::ofstream out(dir / "m.tsv");
        out << "1\tboxing\ts1\t1\tx\t-\n1\tboxing\ts1\t1\ty\t-\n";
    }
    EXPECT_THROW(load_manifest(dir / "m.tsv", o), DataError);
    EXPECT_THROW(load_manifest(dir / "missing.tsv", o), DataError);
}

TEST(Manifest, MissingFrameDirectoryIsReported)
{
    const auto dir = scratch("frames");
    {
        std::ofstream out(dir / "m.tsv");
        out << "1\tboxing\ts1\t1\tnowhere\t-\n";
    }
    try {
        load_manifest(dir / "m.tsv");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("p01_boxing_s1_r1"), std::string::npos);
    }
}

TEST(Completion, FillsEveryGapFromTheSameCell)
{
    auto m = grid(25, 4, {Scenario::s1, Scenario::s2, Scenario::s3, Scenario::s4});
    // Drop three records, one from a cell twice.
    auto drop = [&](RecordKey k) {
        std::erase_if(m.records, [&](const VideoRecord& r) { return r.key == k; });
    };
    drop({4, Action::boxing, Scenario::s3, 2});
    drop({4, Action::boxing, Scenario::s3, 4});
    drop({13, Action::running, Scenario::s1, 1});
    const auto full = complete_dataset(m, 9);
    ASSERT_EQ(full.size(), std::size_t(kCompleteSize));
    std::size_t copies = 0;
    for (const auto& r : full.records) {
        if (r.synthetic) {
            ++copies;
            const auto src = parse_record_id(r.frame_dir.string());
            ASSERT_TRUE(src);
            EXPECT_EQ(src->subject, r.key.subject);
            EXPECT_EQ(src->action, r.key.action);
            EXPECT_EQ(src->scenario, r.key.scenario);
            EXPECT_NE(src->repetition, r.key.repetition);
        }
    }
    EXPECT_EQ(copies, 3u);
    const auto again = complete_dataset(m, 9);
    for (std::size_t i = 0; i < full.size(); ++i) {
        EXPECT_EQ(full.records[i].frame_dir, again.records[i].frame_dir);
    }
}

TEST(Completion, EmptyCellIsUnrecoverable)
{
    auto m = grid(25, 4, {Scenario::s1, Scenario::s2, Scenario::s3, Scenario::s4});
    std::erase_if(m.records, [](const VideoRecord& r) {
        return r.key.subject == 7 && r.key.action == Action::walking && r.key.scenario == Scenario::s4;
    });
    EXPECT_THROW(complete_dataset(m, 1), DataError);
}

TEST(Folds, StratifiedFoldsPartitionAndBalance)
{
    const auto m = grid(25, 4, {Scenario::s1});
    const auto folds = kfold_splits(m, 4, 5);
    ASSERT_EQ(folds.size(), 4u);
    std::multiset<std::size_t> seen;
    for (const auto& f : folds) {
        EXPECT_EQ(f.test_indices.size() + f.train_indices.size(), m.size());
        std::array<int, kClasses> per_class{};
        for (auto i : f.test_indices) {
            seen.insert(i);
            ++per_class[std::size_t(m.records[i].label())];
        }
        for (int c : per_class) {
            EXPECT_EQ(c, 25);
        }
        std::set<std::size_t> train(f.train_indices.begin(), f.train_indices.end());
        for (auto i : f.test_indices) {
            EXPECT_FALSE(train.count(i));
        }
    }
    EXPECT_EQ(seen.size(), m.size());
    EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), m.size());
}

TEST(Folds, UnevenClassesDifferByAtMostOne)
{
    auto m = grid(5, 3, {Scenario::s1});
    m.records.pop_back();
    const auto folds = kfold_splits(m, 4, 2);
    std::size_t lo = m.size(), hi = 0;
    for (const auto& f : folds) {
        lo = std::min(lo, f.test_indices.size());
        hi = std::max(hi, f.test_indices.size());
    }
    EXPECT_LE(hi - lo, 1u);
}

TEST(Folds, DeterministicPerSeed)
{
    const auto m = grid(25, 4, {Scenario::s1});
    EXPECT_EQ(kfold_splits(m, 4, 3)[1].test_indices, kfold_splits(m, 4, 3)[1].test_indices);
    EXPECT_NE(kfold_splits(m, 4, 3)[1].test_indices, kfold_splits(m, 4, 4)[1].test_indices);
}

TEST(Folds, SubjectModeKeepsSubjectsTogether)
{
    const auto m = grid(8, 2, {Scenario::s1});
    const auto folds = kfold_splits(m, 4, 1, SplitMode::subject);
    std::map<int, int> fold_of_subject;
    for (const auto& f : folds) {
        for (auto i : f.test_indices) {
            const int s = m.records[i].key.subject;
            auto [it, fresh] = fold_of_subject.emplace(s, f.fold_index);
            EXPECT_EQ(it->second, f.fold_index);
        }
    }
    EXPECT_EQ(fold_of_subject.size(), 8u);
}

TEST(Folds, RejectsBadK)
{
    const auto m = grid(1, 1, {Scenario::s1});
    EXPECT_THROW(kfold_splits(m, 1, 0), UsageError);
    EXPECT_THROW(kfold_splits(m, 7, 0), UsageError);
}

TEST(Scenario, SubsetKeepsOrder)
{
    const auto m = grid(2, 1, {Scenario::s1, Scenario::s3});
    const auto s3 = scenario_subset(m, Scenario::s3);
    ASSERT_EQ(s3.size(), 12u);
    for (const auto& r : s3.records) {
        EXPECT_EQ(r.key.scenario, Scenario::s3);
    }
}
