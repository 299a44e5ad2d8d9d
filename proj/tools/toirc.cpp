// toirc: command-line front end for the reservoir action-recognition pipeline.
//
// Exit codes: 0 success, 1 usage, 2 data, 3 numeric.

#include "toirc/toirc.hpp"

#include <CLI11.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace toirc;

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> sets;
    std::string scenario;
    std::optional<long long> seed;
    std::string cache;
    std::string runs = "runs";
};

RunConfig resolve_config(const CommonFlags& f)
{
    RunConfig cfg;
    if (!f.config.empty()) {
        cfg.load(f.config);
    }
    for (const auto& s : f.sets) {
        cfg.set(s);
    }
    if (!f.scenario.empty()) {
        cfg.set("dataset.scenario", f.scenario);
    }
    if (f.seed) {
        cfg.set("seed", std::to_string(*f.seed));
    }
    if (!f.cache.empty()) {
        cfg.set("cache", f.cache);
    }
    return cfg;
}

/// Exclusive advisory lock on a directory, held for the object's lifetime.
class DirLock {
public:
    explicit DirLock(const fs::path& dir)
    {
        fs::create_directories(dir);
        const auto path = dir / ".lock";
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
            throw DataError("cannot lock " + path.string());
        }
    }
    ~DirLock()
    {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    int fd_ = -1;
};

// --- dataset and caches -----------------------------------------------------

struct Dataset {
    DatasetManifest all;
    /// Records under evaluation (scenario subset or everything).
    DatasetManifest selected;
    FrameSource source = load_frames;
};

Dataset load_dataset(const RunConfig& cfg)
{
    Dataset d;
    const std::string scenario = cfg.get("dataset.scenario");
    if (cfg.flag("dataset.synthetic")) {
        SyntheticOptions o;
        o.seed = std::uint64_t(cfg.integer("dataset.synthetic_seed"));
        o.subjects = int(cfg.integer("dataset.synthetic_subjects"));
        o.repetitions = int(cfg.integer("dataset.synthetic_repetitions"));
        o.scenarios = scenario == "full" ? std::vector<Scenario>{Scenario::s1, Scenario::s2, Scenario::s3, Scenario::s4}
                                         : std::vector<Scenario>{*parse_scenario(scenario)};
        d.all = synthetic_manifest(o);
        d.source = synthetic_source(o);
    } else {
        const std::string path = cfg.get("dataset.manifest");
        if (path.empty()) {
            throw UsageError("set dataset.manifest (or dataset.synthetic=true)");
        }
        ManifestOptions mo;
        mo.check_frames = cfg.flag("dataset.check_frames");
        d.all = load_manifest(path, mo);
        if (cfg.flag("dataset.complete")) {
            try {
                d.all = complete_dataset(d.all, std::uint64_t(cfg.integer("seed")));
            } catch (const DataError& e) {
                // Completion targets the full 25-subject grid.
                throw DataError(std::string(e.what()) + " (partial datasets need dataset.complete=false)");
            }
        }
    }
    d.selected = scenario == "full" ? d.all : scenario_subset(d.all, *parse_scenario(scenario));
    if (d.selected.records.empty()) {
        throw DataError("no records for scenario " + scenario);
    }
    return d;
}

PreprocessParams preprocess_params(const RunConfig& cfg)
{
    PreprocessParams p;
    p.subsample_factor = int(cfg.integer("preprocess.subsample_factor"));
    p.sigma = cfg.real("preprocess.sigma");
    p.threshold = cfg.real("preprocess.threshold");
    p.min_blob = int(cfg.integer("preprocess.min_blob"));
    p.connectivity = int(cfg.integer("preprocess.connectivity"));
    return p;
}

FeatureParams feature_params(const RunConfig& cfg)
{
    FeatureParams f;
    f.hog.cell = int(cfg.integer("features.cell"));
    f.hog.block = int(cfg.integer("features.block"));
    f.hog.bins = int(cfg.integer("features.bins"));
    f.hog.block_stride = int(cfg.integer("features.block_stride"));
    f.hog.voting = cfg.get("features.voting") == "nearest" ? OrientationVoting::nearest : OrientationVoting::bilinear;
    f.hog.epsilon = cfg.real("features.epsilon");
    f.variability = cfg.real("features.variability");
    return f;
}

const std::vector<std::string> kKeyframeKeys{"dataset", "preprocess", "seed"};
const std::vector<std::string> kFeatureKeys{"dataset", "preprocess", "seed", "features"};

fs::path keyframe_dir(const RunConfig& cfg) { return fs::path(cfg.get("cache")) / "keyframes" / cfg.hash(kKeyframeKeys); }
fs::path feature_dir(const RunConfig& cfg) { return fs::path(cfg.get("cache")) / "features" / cfg.hash(kFeatureKeys); }

void check_stamp(const fs::path& dir, const std::string& hash, const std::string& missing_hint)
{
    std::ifstream in(dir / "stamp");
    std::string got;
    if (!(in >> got)) {
        throw DataError("no cache at " + dir.string() + "; " + missing_hint);
    }
    if (got != hash) {
        throw DataError("cache " + dir.string() + " was produced by config " + got + ", expected " + hash);
    }
}

void write_stamp(const fs::path& dir, const std::string& hash)
{
    std::ofstream out(dir / "stamp");
    out << hash << '\n';
}

KeyframeProvider cached_keyframes(const RunConfig& cfg, const DatasetManifest& m)
{
    const auto dir = keyframe_dir(cfg);
    check_stamp(dir, cfg.hash(kKeyframeKeys), "run `toirc preprocess` with the same config first");
    return [dir, &m](std::size_t i) {
        const auto path = dir / (m.records[i].id() + ".kf");
        if (!fs::exists(path)) {
            throw DataError(m.records[i].id() + ": keyframe cache entry missing; run `toirc preprocess`");
        }
        return read_keyframes(path);
    };
}

std::vector<int> labels_of(const DatasetManifest& m)
{
    std::vector<int> out;
    for (const auto& r : m.records) {
        out.push_back(r.label());
    }
    return out;
}

std::vector<std::string> ids_of(const DatasetManifest& m)
{
    std::vector<std::string> out;
    for (const auto& r : m.records) {
        out.push_back(r.id());
    }
    return out;
}

/// Reservoir inputs from the feature cache.
PreparedData load_prepared(const RunConfig& cfg, const DatasetManifest& m)
{
    const auto dir = feature_dir(cfg);
    const std::string hash = cfg.hash(kFeatureKeys);
    check_stamp(dir, hash, "run `toirc features` with the same config first");
    PreparedData d;
    d.pca = read_pca_model(dir / "pca.bin", hash);
    const auto x = read_feature_cache(dir / "inputs.bin", hash);
    if (x.rows() != Eigen::Index(m.size()) * kKeyframes) {
        throw DataError("feature cache holds " + std::to_string(x.rows()) + " rows for " + std::to_string(m.size()) +
                        " records");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (x.row_index[i * kKeyframes].record_id != m.records[i].id()) {
            throw DataError("feature cache row order does not match the manifest at " + m.records[i].id());
        }
        d.inputs.push_back(x.values.middleRows(Eigen::Index(i) * kKeyframes, kKeyframes));
    }
    d.labels = labels_of(m);
    d.ids = ids_of(m);
    return d;
}

ExperimentConfig experiment_config(const RunConfig& cfg)
{
    ExperimentConfig e;
    e.reservoir.nodes = int(cfg.integer("reservoir.nodes"));
    e.reservoir.alpha = cfg.real("reservoir.alpha");
    if (cfg.get("reservoir.beta") == "auto") {
        e.sigma_input = cfg.real("reservoir.sigma_input");
    } else {
        e.reservoir.beta = cfg.real("reservoir.beta");
    }
    e.reservoir.reset_mode =
        cfg.get("reservoir.reset_mode") == "null_washout" ? ResetMode::null_washout : ResetMode::hard_zero;
    e.reservoir.washout_steps = int(cfg.integer("reservoir.washout_steps"));
    e.reservoir.lag = cfg.get("reservoir.lag") == "strict" ? RingLag::strict : RingLag::delayed;
    e.reset = cfg.flag("reservoir.reset");
    e.toi = ToiSet::parse(cfg.get("readout.toi"));
    if (cfg.get("readout.lambda") == "auto") {
        e.lambda_rescaled = cfg.real("readout.lambda_rescaled");
    } else {
        e.lambda = cfg.real("readout.lambda");
    }
    e.bias = cfg.flag("readout.bias");
    e.readout = cfg.get("readout.mode") == "classical_average" ? ReadoutMode::classical_average : ReadoutMode::toi;
    e.k_folds = int(cfg.integer("eval.k_folds"));
    e.fold_seed = std::uint64_t(cfg.integer("seed"));
    e.split = cfg.get("eval.split") == "subject" ? SplitMode::subject : SplitMode::stratified;
    e.mask_seeds = parse_seed_list("eval.mask_seeds", cfg.get("eval.mask_seeds"));
    e.variability = cfg.real("features.variability");
    e.timing = cfg.flag("eval.timing");
    return e;
}

fs::path run_dir(const RunConfig& cfg, const CommonFlags& f)
{
    const fs::path dir = fs::path(f.runs) / cfg.hash();
    fs::create_directories(dir);
    std::ofstream out(dir / "config");
    out << "# config_hash " << cfg.hash() << '\n' << cfg.str();
    return dir;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << text;
}

// --- subcommands ------------------------------------------------------------

int cmd_preprocess(const CommonFlags& f)
{
    const RunConfig cfg = resolve_config(f);
    const Dataset d = load_dataset(cfg);
    const auto params = preprocess_params(cfg);
    const auto dir = keyframe_dir(cfg);
    DirLock lock(fs::path(cfg.get("cache")));
    fs::create_directories(dir);
    write_stamp(dir, cfg.hash(kKeyframeKeys));
    std::size_t hits = 0, written = 0, padded = 0;
    std::vector<std::string> failed;
    for (const auto& rec : d.selected.records) {
        const auto path = dir / (rec.id() + ".kf");
        if (fs::exists(path)) {
            ++hits;
            continue;
        }
        try {
            const auto k = preprocess_sequence(rec, d.all, params, d.source);
            padded += k.pad_count > 0;
            const auto tmp = path.string() + ".tmp";
            write_keyframes(tmp, k);
            fs::rename(tmp, path);
            ++written;
        } catch (const Error& e) {
            failed.push_back(e.what());
        }
    }
    std::printf("records %zu  cache hits %zu  computed %zu  padded %zu  failed %zu\n", d.selected.size(), hits,
                written, padded, failed.size());
    std::printf("keyframes %s\n", dir.c_str());
    if (!failed.empty()) {
        for (const auto& e : failed) {
            std::fprintf(stderr, "unreadable record: %s\n", e.c_str());
        }
        return 2;
    }
    return 0;
}

int cmd_features(const CommonFlags& f)
{
    const RunConfig cfg = resolve_config(f);
    const Dataset d = load_dataset(cfg);
    const auto provider = cached_keyframes(cfg, d.selected);
    const auto fp = feature_params(cfg);
    const auto labels = labels_of(d.selected);
    const auto ids = ids_of(d.selected);
    const auto t0 = std::chrono::steady_clock::now();
    const PreparedData data = prepare_features(d.selected.size(), provider, labels, ids, fp);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto dir = feature_dir(cfg);
    const std::string hash = cfg.hash(kFeatureKeys);
    DirLock lock(fs::path(cfg.get("cache")));
    fs::create_directories(dir);
    write_pca_model(dir / "pca.bin", data.pca, hash);
    FeatureMatrix x;
    x.values.resize(Eigen::Index(data.size()) * kKeyframes, data.input_dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
        x.values.middleRows(Eigen::Index(i) * kKeyframes, kKeyframes) = data.inputs[i];
        for (int k = 0; k < kKeyframes; ++k) {
            x.row_index.push_back({data.ids[i], k + 1});
        }
    }
    write_feature_cache(dir / "inputs.bin", x, fp.variability, hash);
    write_stamp(dir, hash);
    std::printf("rows %ld  hog length %ld  nonzero features %ld  components %ld  explained %.4f  (%.1f s)\n",
                long(x.rows()), long(data.pca.input_dim), long(data.pca.dim()), long(data.pca.size()),
                data.pca.explained(), secs);
    std::printf("features %s\n", dir.c_str());
    return 0;
}

void attach_throughput(ExperimentReport& rep, const RunConfig& cfg, const Dataset& d, const PreparedData& data,
                       const ExperimentConfig& ec, const std::vector<FoldSplit>& folds)
{
    if (!ec.timing) {
        return;
    }
    const auto& fold = folds.front();
    const auto pipeline =
        train_pipeline(data, fold.train_indices, ec, ec.mask_seeds.front(), feature_params(cfg).hog, preprocess_params(cfg));
    const auto provider = cached_keyframes(cfg, d.selected);
    std::vector<KeyframeSet> keyframes;
    for (auto i : fold.test_indices) {
        keyframes.push_back(provider(i));
    }
    const auto frames = std::size_t(cfg.integer("eval.throughput_frames"));
    const int runs = int(cfg.integer("eval.throughput_runs"));
    rep.fps_inference = measure_throughput([&](std::size_t s) { pipeline.classify_keyframes(keyframes[s]); },
                                           keyframes.size(), kKeyframes, frames, runs)
                            .fps;
    // End to end from raw frames, over a small preloaded set of test sequences.
    struct Raw {
        std::vector<GrayFrame> frames;
        GrayFrame background;
    };
    std::vector<Raw> raw;
    for (std::size_t j = 0; j < std::min<std::size_t>(12, fold.test_indices.size()); ++j) {
        const auto& rec = d.selected.records[fold.test_indices[j]];
        Raw r;
        r.frames = d.source(rec);
        r.background = rec.background_ref ? d.source(*d.all.find(*rec.background_ref)).front() : r.frames.front();
        raw.push_back(std::move(r));
    }
    rep.fps_end_to_end = measure_throughput([&](std::size_t s) { pipeline.classify_frames(raw[s].frames, raw[s].background); },
                                            raw.size(), kKeyframes, frames, runs)
                             .fps;
}

void write_report(const fs::path& dir, const std::string& stem, const ExperimentReport& rep, const RunConfig& cfg,
                  const DatasetManifest& m)
{
    write_text(dir / stem, report_text(rep, cfg.hash(), m.class_names));
    write_text(dir / (stem + ".kv"), report_kv(rep, cfg.hash()));
    std::ostringstream conf;
    for (const auto& row : rep.confusion) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            conf << (j ? " " : "") << row[j];
        }
        conf << '\n';
    }
    write_text(dir / (stem == "report" ? std::string("confusion") : stem + ".confusion"), conf.str());
    std::ostringstream pred;
    pred << "# record mask_seed fold label predicted\n";
    for (const auto& p : rep.predictions) {
        pred << m.records[p.record].id() << ' ' << p.mask_seed << ' ' << p.fold << ' ' << p.label << ' ' << p.predicted
             << '\n';
    }
    write_text(dir / (stem + ".predictions"), pred.str());
}

int cmd_eval(const CommonFlags& f)
{
    const RunConfig cfg = resolve_config(f);
    const Dataset d = load_dataset(cfg);
    const PreparedData data = load_prepared(cfg, d.selected);
    const auto ec = experiment_config(cfg);
    const auto folds = kfold_splits(d.selected, ec.k_folds, ec.fold_seed, ec.split);
    auto rep = run_experiment(data, ec, folds);
    attach_throughput(rep, cfg, d, data, ec, folds);
    const auto dir = run_dir(cfg, f);
    write_report(dir, "report", rep, cfg, d.selected);
    std::cout << report_text(rep, cfg.hash(), d.selected.class_names);
    if (cfg.flag("features.pca_per_fold")) {
        const auto provider = cached_keyframes(cfg, d.selected);
        const auto full = prepare_features(d.selected.size(), provider, data.labels, data.ids, feature_params(cfg), true);
        auto pf = ec;
        pf.pca_per_fold = true;
        const auto rep_fold = run_experiment(full, pf, folds);
        write_report(dir, "report_pca_per_fold", rep_fold, cfg, d.selected);
        std::printf("per-fold PCA (leakage-safe): mean %.4f std %.4f\n", rep_fold.mean_accuracy, rep_fold.std_accuracy);
    }
    std::printf("run %s\n", dir.c_str());
    return 0;
}

int cmd_train(const CommonFlags& f)
{
    const RunConfig cfg = resolve_config(f);
    const Dataset d = load_dataset(cfg);
    const PreparedData data = load_prepared(cfg, d.selected);
    const auto ec = experiment_config(cfg);
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = train_pipeline(data, all, ec, ec.mask_seeds.front(), feature_params(cfg).hog, preprocess_params(cfg));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::size_t correct = 0;
    const auto states = p.baseline ? data.inputs : detail::trajectories(p.reservoir, p.mask, data.inputs, true);
    for (std::size_t i = 0; i < data.size(); ++i) {
        correct += classify(p.readout, concat_toi(states[i], p.readout.toi)) == data.labels[i];
    }
    const auto dir = run_dir(cfg, f);
    write_readout_model(dir / "readout.bin", p.readout);
    std::printf("trained on %zu records: beta %.6g lambda %.6g  training accuracy %.4f  (%.2f s)\n", data.size(),
                p.reservoir.beta, p.readout.lambda, double(correct) / double(data.size()), secs);
    std::printf("run %s\n", dir.c_str());
    return 0;
}

/// Nested TOI sets of size 1..10, growing from the last/first/middle choice.
std::vector<ToiSet> nested_toi_sets()
{
    const int order[] = {10, 1, 5, 8, 9, 3, 7, 2, 4, 6};
    std::vector<ToiSet> out;
    std::vector<int> cur;
    for (int t : order) {
        cur.push_back(t);
        auto sorted = cur;
        std::sort(sorted.begin(), sorted.end());
        out.emplace_back(sorted);
    }
    return out;
}

int cmd_baseline(const CommonFlags& f)
{
    const RunConfig cfg = resolve_config(f);
    const Dataset d = load_dataset(cfg);
    const PreparedData data = load_prepared(cfg, d.selected);
    auto ec = experiment_config(cfg);
    ec.timing = false;
    const auto folds = kfold_splits(d.selected, ec.k_folds, ec.fold_seed, ec.split);
    std::ostringstream table;
    table << "# tois toi_set reservoir_acc reservoir_std baseline_acc baseline_std gap\n";
    double best_res = 0.0, best_base = 0.0;
    for (const auto& toi : nested_toi_sets()) {
        ec.toi = toi;
        const auto r = run_experiment(data, ec, folds);
        const auto b = baseline_linear(data, ec, folds);
        best_res = std::max(best_res, r.mean_accuracy);
        best_base = std::max(best_base, b.mean_accuracy);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d %s %.4f %.4f %.4f %.4f %+.4f\n", toi.size(), toi.str().c_str(),
                      r.mean_accuracy, r.std_accuracy, b.mean_accuracy, b.std_accuracy, r.mean_accuracy - b.mean_accuracy);
        table << buf;
        std::cout << buf << std::flush;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "# best reservoir %.4f  best baseline %.4f  gap %+.4f\n", best_res, best_base,
                  best_res - best_base);
    table << buf;
    std::cout << buf;
    const auto dir = run_dir(cfg, f);
    write_text(dir / "baseline", table.str());
    std::printf("run %s\n", dir.c_str());
    return 0;
}

int cmd_toi_search(const CommonFlags& f)
{
    const RunConfig cfg = resolve_config(f);
    const Dataset d = load_dataset(cfg);
    const PreparedData data = load_prepared(cfg, d.selected);
    auto ec = experiment_config(cfg);
    ec.timing = false;
    const auto folds = kfold_splits(d.selected, ec.k_folds, ec.fold_seed, ec.split);
    const int t = int(cfg.integer("readout.toi_search_size"));
    if (t > kMaxToi) {
        throw UsageError("readout.toi_search_size must be <= 10");
    }
    const auto mode = cfg.get("readout.toi_search_mode") == "exhaustive" ? ToiSearchMode::exhaustive : ToiSearchMode::ranked;
    std::size_t evals = 0;
    const auto scores = toi_search(
        [&](const ToiSet& s) {
            ++evals;
            ec.toi = s;
            return run_experiment(data, ec, folds).mean_accuracy;
        },
        t, mode);
    std::ostringstream out;
    out << "# rank toi accuracy (" << evals << " evaluations)\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out << i + 1 << ' ' << scores[i].toi.str() << ' ' << format_double(scores[i].accuracy) << '\n';
    }
    const auto dir = run_dir(cfg, f);
    write_text(dir / "toi_search", out.str());
    std::cout << out.str();
    std::printf("run %s\n", dir.c_str());
    return 0;
}

int cmd_hyperopt(const CommonFlags& f)
{
    const RunConfig cfg = resolve_config(f);
    const Dataset d = load_dataset(cfg);
    const PreparedData data = load_prepared(cfg, d.selected);
    auto ec = experiment_config(cfg);
    ec.timing = false;
    ec.mask_seeds = parse_seed_list("hyperopt.mask_seeds", cfg.get("hyperopt.mask_seeds"));
    const auto folds = kfold_splits(d.selected, ec.k_folds, ec.fold_seed, ec.split);
    HyperBounds bounds{{{"alpha", cfg.real("hyperopt.alpha_min"), cfg.real("hyperopt.alpha_max"), false},
                        {"sigma_input", cfg.real("hyperopt.sigma_min"), cfg.real("hyperopt.sigma_max"), true},
                        {"lambda_rescaled", cfg.real("hyperopt.lambda_min"), cfg.real("hyperopt.lambda_max"), true}}};
    BayesOptions opts;
    opts.budget = int(cfg.integer("hyperopt.budget"));
    opts.refit_interval = int(cfg.integer("hyperopt.refit_interval"));
    opts.gp.starts = int(cfg.integer("hyperopt.gp_starts"));
    opts.gp.noise_floor = cfg.real("hyperopt.noise_floor");
    const auto seed = std::uint64_t(cfg.integer("seed"));
    opts.gp.seed = seed;

    const auto dir = run_dir(cfg, f);
    const auto trace_path = dir / "trace";
    std::vector<Observation> resume;
    if (fs::exists(trace_path)) {
        resume = read_trace(trace_path, 3);
        write_trace(trace_path, resume);
        std::printf("resuming from %zu evaluations\n", resume.size());
    }
    std::ofstream trace(trace_path, std::ios::app);
    std::size_t iter = resume.size();
    auto make_cfg = [&](const Vector& x) {
        auto e = ec;
        e.reservoir.alpha = x(0);
        e.sigma_input = x(1);
        e.lambda_rescaled = x(2);
        return e;
    };
    const auto result = bayes_optimize(
        [&](const Vector& x) {
            const double score = run_experiment(data, make_cfg(x), folds).mean_accuracy;
            append_trace_line(trace, ++iter, {x, score});
            trace.flush();
            std::printf("%4zu  alpha %.4f  sigma_input %.3g  lambda/var %.3g  ->  %.4f\n", iter, x(0), x(1), x(2), score);
            std::fflush(stdout);
            return score;
        },
        bounds, seed, opts, resume);
    const auto best = run_experiment(data, make_cfg(result.best_point), folds);
    double beta = 0.0, lambda = 0.0;
    for (const auto& c : best.cells) {
        beta += c.beta / double(best.cells.size());
        lambda += c.lambda / double(best.cells.size());
    }
    std::ostringstream out;
    out << "best_score=" << format_double(result.best_score) << '\n'
        << "alpha=" << format_double(result.best_point(0)) << '\n'
        << "sigma_input=" << format_double(result.best_point(1)) << '\n'
        << "lambda_rescaled=" << format_double(result.best_point(2)) << '\n'
        << "beta=" << format_double(beta) << '\n'
        << "lambda=" << format_double(lambda) << '\n'
        << "evaluations=" << result.trace.size() << '\n'
        << "config_hash=" << cfg.hash() << '\n';
    write_text(dir / "report", out.str());
    std::cout << out.str();
    std::printf("run %s\n", dir.c_str());
    return 0;
}

int cmd_synth(const std::string& out, const SyntheticOptions& o)
{
    const auto path = write_synthetic_dataset(out, o);
    std::printf("manifest %s\n", path.c_str());
    return 0;
}

void add_common(CLI::App* sub, CommonFlags& f)
{
    sub->add_option("--config", f.config, "key=value config file");
    sub->add_option("--set", f.sets, "override, key=value (repeatable)");
    sub->add_option("--scenario", f.scenario, "s1..s4 or full");
    sub->add_option("--seed", f.seed, "global seed");
    sub->add_option("--cache", f.cache, "cache directory");
    sub->add_option("--runs", f.runs, "run directory root")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Reservoir-computing human action recognition"};
    app.require_subcommand(1);
    CommonFlags flags;
    struct Command {
        const char* name;
        const char* help;
        int (*run)(const CommonFlags&);
    };
    const Command commands[] = {
        {"preprocess", "silhouette keyframes for every record into the cache", cmd_preprocess},
        {"features", "HOG, zero-feature removal and PCA from the keyframe cache", cmd_features},
        {"train", "fit the readout on every selected record", cmd_train},
        {"eval", "cross-validated accuracy, confusion matrix and throughput", cmd_eval},
        {"hyperopt", "Bayesian optimization of alpha, input spread and rescaled lambda", cmd_hyperopt},
        {"baseline", "reservoir versus linear readout on the PCA inputs", cmd_baseline},
        {"toi-search", "rank timestep-of-interest subsets", cmd_toi_search},
    };
    const Command* chosen = nullptr;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_common(sub, flags);
        sub->callback([&chosen, &c] { chosen = &c; });
    }
    std::string synth_out;
    SyntheticOptions synth;
    std::vector<std::string> synth_scenarios{"s1"};
    auto* s = app.add_subcommand("synth", "write the procedural surrogate dataset as PGM frames plus a manifest");
    s->add_option("--out", synth_out, "output directory")->required();
    s->add_option("--seed", synth.seed, "rendering seed")->capture_default_str();
    s->add_option("--subjects", synth.subjects, "subjects (1..25)")->capture_default_str();
    s->add_option("--repetitions", synth.repetitions, "repetitions (1..4)")->capture_default_str();
    s->add_option("--scenarios", synth_scenarios, "scenarios")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    try {
        if (s->parsed()) {
            synth.scenarios.clear();
            for (const auto& name : synth_scenarios) {
                auto sc = parse_scenario(name);
                if (!sc) {
                    throw UsageError("unknown scenario '" + name + "'");
                }
                synth.scenarios.push_back(*sc);
            }
            return cmd_synth(synth_out, synth);
        }
        return chosen->run(flags);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return int(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return int(ErrorKind::data);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return int(ErrorKind::data);
    }
}
