#pragma once

// Dataset manifests for KTH-structured action videos: loading, completion of
// missing sequences, scenario subsets and K-fold splits.

#include "error.hpp"
#include "image.hpp"
#include "random.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace toirc {

inline constexpr int kClasses = 6;
inline constexpr int kSubjects = 25;
inline constexpr int kScenarios = 4;
inline constexpr int kRepetitions = 4;
inline constexpr int kCompleteSize = kSubjects * kClasses * kScenarios * kRepetitions;

/// Class index order is the order of this enum.
enum class Action { boxing, handclapping, handwaving, jogging, running, walking };
enum class Scenario { s1, s2, s3, s4 };

inline constexpr std::array<std::string_view, kClasses> kActionNames{
    "boxing", "handclapping", "handwaving", "jogging", "running", "walking"};
inline constexpr std::array<std::string_view, kScenarios> kScenarioNames{"s1", "s2", "s3", "s4"};

inline std::string_view to_string(Action a) { return kActionNames[std::size_t(a)]; }
inline std::string_view to_string(Scenario s) { return kScenarioNames[std::size_t(s)]; }

inline std::optional<Action> parse_action(std::string_view s)
{
    for (std::size_t i = 0; i < kActionNames.size(); ++i) {
        if (kActionNames[i] == s) {
            return Action(i);
        }
    }
    return std::nullopt;
}

inline std::optional<Scenario> parse_scenario(std::string_view s)
{
    for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
        if (kScenarioNames[i] == s) {
            return Scenario(i);
        }
    }
    return std::nullopt;
}

/// In-place actions take their background from another sequence.
inline bool is_in_place(Action a) { return a == Action::boxing || a == Action::handclapping || a == Action::handwaving; }

struct RecordKey {
    int subject = 1;
    Action action = Action::boxing;
    Scenario scenario = Scenario::s1;
    int repetition = 1;

    /// Manifest ordering: (scenario, subject, action, repetition).
    auto tie() const { return std::tuple(int(scenario), subject, int(action), repetition); }
    friend bool operator<(const RecordKey& a, const RecordKey& b) { return a.tie() < b.tie(); }
    friend bool operator==(const RecordKey& a, const RecordKey& b) { return a.tie() == b.tie(); }

    /// Canonical identity string, e.g. "p03_running_s2_r1".
    std::string id() const
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "p%02d_%s_%s_r%d", subject, std::string(to_string(action)).c_str(),
                      std::string(to_string(scenario)).c_str(), repetition);
        return buf;
    }
};

inline std::optional<RecordKey> parse_record_id(std::string_view id)
{
    // p03_running_s2_r1
    std::vector<std::string> parts;
    std::string cur;
    for (char c : id) {
        if (c == '_') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    if (parts.size() != 4 || parts[0].size() < 2 || parts[0][0] != 'p' || parts[3].size() < 2 || parts[3][0] != 'r') {
        return std::nullopt;
    }
    RecordKey k;
    try {
        k.subject = std::stoi(parts[0].substr(1));
        k.repetition = std::stoi(parts[3].substr(1));
    } catch (const std::exception&) {
        return std::nullopt;
    }
    auto a = parse_action(parts[1]);
    auto s = parse_scenario(parts[2]);
    if (!a || !s) {
        return std::nullopt;
    }
    k.action = *a;
    k.scenario = *s;
    return k;
}

struct VideoRecord {
    RecordKey key;
    std::filesystem::path frame_dir;
    /// Record whose first frame supplies the background; own first frame when absent.
    std::optional<RecordKey> background_ref;
    /// Set on records copied in by complete_dataset.
    bool synthetic = false;

    std::string id() const { return key.id(); }
    int label() const { return int(key.action); }
};

struct DatasetManifest {
    std::vector<VideoRecord> records;
    std::vector<std::string> class_names{kActionNames.begin(), kActionNames.end()};

    std::size_t size() const { return records.size(); }

    const VideoRecord* find(const RecordKey& k) const
    {
        auto it = std::lower_bound(records.begin(), records.end(), k,
                                   [](const VideoRecord& r, const RecordKey& key) { return r.key < key; });
        return (it != records.end() && it->key == k) ? &*it : nullptr;
    }

    void sort() { std::stable_sort(records.begin(), records.end(), [](auto& a, auto& b) { return a.key < b.key; }); }
};

struct FoldSplit {
    int fold_index = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '\t') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline int parse_int_field(const std::string& s, const char* name, std::size_t line_no)
{
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size()) {
        throw DataError("manifest line " + std::to_string(line_no) + ": " + name + " is not an integer: '" + s + "'");
    }
    return v;
}

} // namespace detail

struct ManifestOptions {
    /// Verify frame directories and frame dimensions on load.
    bool check_frames = true;
    int frame_width = kFrameWidth;
    int frame_height = kFrameHeight;
};

/// Parses a manifest and checks every referenced frame directory.
///
/// Rows: subject, action, scenario, repetition, frame_dir, background_ref
/// (tab-separated, "-" for no background_ref, '#' starts a comment line).
/// Relative frame_dir entries resolve against the manifest's directory.
inline DatasetManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& opts = {})
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open manifest " + path.string());
    }
    const auto base = path.parent_path();
    DatasetManifest m;
    std::set<RecordKey> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto f = detail::split_tabs(line);
        const std::string where = "manifest line " + std::to_string(line_no);
        if (f.size() != 6) {
            throw DataError(where + ": expected 6 tab-separated fields, got " + std::to_string(f.size()));
        }
        VideoRecord r;
        r.key.subject = detail::parse_int_field(f[0], "subject", line_no);
        auto action = parse_action(f[1]);
        auto scenario = parse_scenario(f[2]);
        r.key.repetition = detail::parse_int_field(f[3], "repetition", line_no);
        if (r.key.subject < 1 || r.key.subject > kSubjects) {
            throw DataError(where + ": subject " + f[0] + " outside 1.." + std::to_string(kSubjects));
        }
        if (!action) {
            throw DataError(where + ": unknown action '" + f[1] + "'");
        }
        if (!scenario) {
            throw DataError(where + ": unknown scenario '" + f[2] + "'");
        }
        if (r.key.repetition < 1 || r.key.repetition > kRepetitions) {
            throw DataError(where + ": repetition " + f[3] + " outside 1.." + std::to_string(kRepetitions));
        }
        r.key.action = *action;
        r.key.scenario = *scenario;
        r.frame_dir = f[4];
        if (r.frame_dir.is_relative()) {
            r.frame_dir = base / r.frame_dir;
        }
        if (f[5] != "-") {
            auto ref = parse_record_id(f[5]);
            if (!ref) {
                throw DataError(where + ": malformed background_ref '" + f[5] + "'");
            }
            r.background_ref = *ref;
        }
        if (!seen.insert(r.key).second) {
            throw DataError(where + ": duplicate record " + r.id());
        }
        if (opts.check_frames) {
            if (!std::filesystem::is_directory(r.frame_dir)) {
                throw DataError(r.id() + ": frame_dir does not exist: " + r.frame_dir.string());
            }
            const auto frames = list_frames(r.frame_dir);
            if (frames.empty()) {
                throw DataError(r.id() + ": no .pgm frames in " + r.frame_dir.string());
            }
            for (const auto& fp : frames) {
                const auto [w, h] = read_pgm_size(fp);
                if (w != opts.frame_width || h != opts.frame_height) {
                    throw DataError(r.id() + ": frame " + fp.filename().string() + " is " + std::to_string(w) + "x" +
                                    std::to_string(h) + ", expected " + std::to_string(opts.frame_width) + "x" +
                                    std::to_string(opts.frame_height));
                }
            }
        }
        m.records.push_back(std::move(r));
    }
    if (m.records.empty()) {
        throw DataError("manifest " + path.string() + ": no records");
    }
    m.sort();
    for (const auto& r : m.records) {
        if (r.background_ref && !m.find(*r.background_ref)) {
            throw DataError(r.id() + ": background_ref " + r.background_ref->id() + " is not in the manifest");
        }
    }
    return m;
}

/// Writes a manifest in the load_manifest schema. Synthetic flags are not persisted.
inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write manifest " + path.string());
    }
    out << "# subject\taction\tscenario\trepetition\tframe_dir\tbackground_ref\n";
    for (const auto& r : m.records) {
        out << r.key.subject << '\t' << to_string(r.key.action) << '\t' << to_string(r.key.scenario) << '\t'
            << r.key.repetition << '\t' << r.frame_dir.string() << '\t'
            << (r.background_ref ? r.background_ref->id() : std::string("-")) << '\n';
    }
}

/// Fills every missing (subject, action, scenario, repetition) cell of the full
/// 25x6x4x4 grid with a copy of a same-subject/action/scenario record, chosen
/// by a seeded draw.
inline DatasetManifest complete_dataset(const DatasetManifest& m, std::uint64_t seed)
{
    if (m.size() > std::size_t(kCompleteSize)) {
        throw DataError("manifest has " + std::to_string(m.size()) + " records, more than " +
                        std::to_string(kCompleteSize));
    }
    DatasetManifest out = m;
    out.sort();
    std::vector<VideoRecord> added;
    std::uint64_t cell = 0;
    const CounterRng rng(seed, streams::completion);
    for (int sc = 0; sc < kScenarios; ++sc) {
        for (int subject = 1; subject <= kSubjects; ++subject) {
            for (int a = 0; a < kClasses; ++a) {
                std::vector<const VideoRecord*> present;
                std::vector<int> missing;
                for (int rep = 1; rep <= kRepetitions; ++rep) {
                    const RecordKey k{subject, Action(a), Scenario(sc), rep};
                    const VideoRecord* r = out.find(k);
                    if (r && !r->synthetic) {
                        present.push_back(r);
                    } else if (!r) {
                        missing.push_back(rep);
                    }
                }
                ++cell;
                if (missing.empty()) {
                    continue;
                }
                if (present.empty()) {
                    throw DataError("unrecoverable gap: subject " + std::to_string(subject) + " has no " +
                                    std::string(to_string(Action(a))) + "/" + std::string(to_string(Scenario(sc))) +
                                    " repetition to copy");
                }
                for (int rep : missing) {
                    // Draw index keyed by grid position keeps choices independent of manifest order.
                    const std::uint64_t draw = rng.bits_at(cell * kRepetitions + std::uint64_t(rep));
                    VideoRecord copy = *present[draw % present.size()];
                    copy.key.repetition = rep;
                    copy.synthetic = true;
                    added.push_back(std::move(copy));
                }
            }
        }
    }
    for (auto& r : added) {
        out.records.push_back(std::move(r));
    }
    out.sort();
    return out;
}

inline DatasetManifest scenario_subset(const DatasetManifest& m, Scenario s)
{
    DatasetManifest out;
    out.class_names = m.class_names;
    for (const auto& r : m.records) {
        if (r.key.scenario == s) {
            out.records.push_back(r);
        }
    }
    return out;
}

enum class SplitMode { stratified, subject };

/// K-fold splits over manifest indices.
///
/// Stratified mode shuffles each class with a seeded permutation and deals the
/// members round-robin, continuing the dealing position across classes, so
/// per-fold class counts and fold sizes each differ by at most one. Subject
/// mode assigns whole subjects to folds (sizes then follow the subjects).
inline std::vector<FoldSplit> kfold_splits(const DatasetManifest& m, int k, std::uint64_t seed,
                                           SplitMode mode = SplitMode::stratified)
{
    const std::size_t n = m.size();
    if (k < 2 || std::size_t(k) > n) {
        throw UsageError("k-fold count " + std::to_string(k) + " outside [2, " + std::to_string(n) + "]");
    }
    std::vector<int> fold_of(n, 0);
    CounterRng rng(seed, streams::folds);
    if (mode == SplitMode::stratified) {
        std::size_t deal = 0;
        for (int c = 0; c < kClasses; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i) {
                if (m.records[i].label() == c) {
                    members.push_back(i);
                }
            }
            shuffle(std::span<std::size_t>(members), rng);
            for (std::size_t i : members) {
                fold_of[i] = int(deal++ % std::size_t(k));
            }
        }
    } else {
        std::vector<int> subjects;
        for (const auto& r : m.records) {
            subjects.push_back(r.key.subject);
        }
        std::sort(subjects.begin(), subjects.end());
        subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
        if (subjects.size() < std::size_t(k)) {
            throw UsageError("subject-wise split needs at least k distinct subjects");
        }
        shuffle(std::span<int>(subjects), rng);
        std::map<int, int> subject_fold;
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            subject_fold[subjects[i]] = int(i % std::size_t(k));
        }
        for (std::size_t i = 0; i < n; ++i) {
            fold_of[i] = subject_fold[m.records[i].key.subject];
        }
    }
    std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        folds[std::size_t(f)].fold_index = f;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (int f = 0; f < k; ++f) {
            (fold_of[i] == f ? folds[std::size_t(f)].test_indices : folds[std::size_t(f)].train_indices).push_back(i);
        }
    }
    return folds;
}

} // namespace toirc
