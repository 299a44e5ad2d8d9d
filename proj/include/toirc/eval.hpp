#pragma once

// Cross-validated experiment harness: keyframes -> HOG -> PCA -> reservoir
// -> TOI readout, over a grid of input masks and folds.

#include "dataset.hpp"
#include "error.hpp"
#include "hog.hpp"
#include "hyperopt.hpp"
#include "linalg.hpp"
#include "pca.hpp"
#include "preprocess.hpp"
#include "readout.hpp"
#include "reservoir.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace toirc {

// --- feature preparation ----------------------------------------------------

/// Keyframes of manifest record i.
using KeyframeProvider = std::function<KeyframeSet(std::size_t)>;

struct FeatureParams {
    HogParams hog;
    double variability = 0.75;
};

/// PCA-reduced reservoir inputs for every record of a manifest.
struct PreparedData {
    /// One 10 x q matrix per record, rows are keyframes.
    std::vector<RowMatrix> inputs;
    std::vector<int> labels;
    std::vector<std::string> ids;
    PcaModel pca;
    /// Zero-dropped HOG rows (records*10 x D), kept only on request.
    std::optional<Matrix> hog;

    std::size_t size() const { return inputs.size(); }
    Eigen::Index input_dim() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

namespace detail {

inline void check_keyframes(const KeyframeSet& k, std::size_t record)
{
    if (k.frames.size() != std::size_t(kKeyframes)) {
        throw DataError("record " + std::to_string(record) + " has " + std::to_string(k.frames.size()) +
                        " keyframes, expected 10");
    }
}

/// HOG of every keyframe of record i into rows [10 i, 10 i + 10) of out.
inline void hog_rows(const KeyframeSet& k, const HogParams& p, Eigen::Ref<Matrix> out)
{
    for (int f = 0; f < kKeyframes; ++f) {
        const auto h = hog(k.frames[std::size_t(f)], p);
        out.row(f) = Eigen::Map<const Eigen::RowVectorXd>(h.data(), Eigen::Index(h.size()));
    }
}

/// Moves the kept columns to the front in place and drops the rest.
inline void compact_columns(Matrix& x, const std::vector<Eigen::Index>& kept)
{
    for (std::size_t j = 0; j < kept.size(); ++j) {
        if (kept[j] != Eigen::Index(j)) {
            x.col(Eigen::Index(j)) = x.col(kept[j]);
        }
    }
    x.conservativeResize(Eigen::NoChange, Eigen::Index(kept.size()));
}

inline RowMatrix project_block(const PcaModel& m, const Eigen::Ref<const Matrix>& reduced_rows)
{
    return (reduced_rows.rowwise() - m.mean.transpose()) * m.components.transpose();
}

} // namespace detail

/// HOG, zero-feature removal and PCA over all keyframes of `count` records.
///
/// When the keyframe rows outnumber the HOG length the covariance is
/// accumulated in a streaming pass and keyframes are requested three times
/// (nonzero scan, moments, projection); otherwise the HOG matrix is held in
/// memory and the Gram route is used.
inline PreparedData prepare_features(std::size_t count, const KeyframeProvider& keyframes, std::span<const int> labels,
                                     std::span<const std::string> ids, const FeatureParams& p, bool keep_hog = false)
{
    p.hog.validate();
    if (count < 1 || labels.size() != count || ids.size() != count) {
        throw DataError("feature preparation needs one label and id per record");
    }
    const Eigen::Index rows = Eigen::Index(count) * kKeyframes;
    const Eigen::Index width = p.hog.length(kFrameWidth, kFrameHeight);
    PreparedData out;
    out.labels.assign(labels.begin(), labels.end());
    out.ids.assign(ids.begin(), ids.end());

    if (rows <= width || keep_hog) {
        Matrix x(rows, width);
        for (std::size_t i = 0; i < count; ++i) {
            const auto k = keyframes(i);
            detail::check_keyframes(k, i);
            detail::hog_rows(k, p.hog, x.middleRows(Eigen::Index(i) * kKeyframes, kKeyframes));
        }
        auto kept = nonzero_columns(x);
        if (kept.empty()) {
            throw NumericError("every HOG feature is zero");
        }
        detail::compact_columns(x, kept);
        FeatureMatrix fm;
        fm.values = std::move(x);
        out.pca = pca_fit(fm, p.variability);
        out.pca.kept_indices = std::move(kept);
        out.pca.input_dim = width;
        for (std::size_t i = 0; i < count; ++i) {
            out.inputs.push_back(detail::project_block(out.pca, fm.values.middleRows(Eigen::Index(i) * kKeyframes, kKeyframes)));
        }
        if (keep_hog) {
            out.hog = std::move(fm.values);
        }
        return out;
    }

    // Streaming covariance route.
    std::vector<char> nonzero(std::size_t(width), 0);
    Matrix block(kKeyframes, width);
    for (std::size_t i = 0; i < count; ++i) {
        const auto k = keyframes(i);
        detail::check_keyframes(k, i);
        detail::hog_rows(k, p.hog, block);
        for (Eigen::Index c = 0; c < width; ++c) {
            nonzero[std::size_t(c)] |= (block.col(c).array() != 0.0).any();
        }
    }
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < width; ++c) {
        if (nonzero[std::size_t(c)]) {
            kept.push_back(c);
        }
    }
    if (kept.empty()) {
        throw NumericError("every HOG feature is zero");
    }
    auto reduce = [&](const Matrix& b) {
        Matrix r(b.rows(), Eigen::Index(kept.size()));
        for (std::size_t j = 0; j < kept.size(); ++j) {
            r.col(Eigen::Index(j)) = b.col(kept[j]);
        }
        return r;
    };
    MomentAccumulator acc(Eigen::Index(kept.size()));
    for (std::size_t i = 0; i < count; ++i) {
        detail::hog_rows(keyframes(i), p.hog, block);
        acc.add(reduce(block));
    }
    out.pca = pca_from_covariance(acc.covariance(), acc.mean(), p.variability);
    out.pca.kept_indices = kept;
    out.pca.input_dim = width;
    for (std::size_t i = 0; i < count; ++i) {
        detail::hog_rows(keyframes(i), p.hog, block);
        out.inputs.push_back(detail::project_block(out.pca, reduce(block)));
    }
    return out;
}

/// Refits PCA on the keyframes of the listed records only and projects all
/// records with it. Needs the HOG rows kept by prepare_features.
inline PreparedData refit_pca(const PreparedData& data, std::span<const std::size_t> fit_records, double variability)
{
    if (!data.hog) {
        throw UsageError("per-fold PCA needs the HOG matrix; prepare with keep_hog");
    }
    const Matrix& all = *data.hog;
    FeatureMatrix fm;
    fm.values.resize(Eigen::Index(fit_records.size()) * kKeyframes, all.cols());
    for (std::size_t j = 0; j < fit_records.size(); ++j) {
        fm.values.middleRows(Eigen::Index(j) * kKeyframes, kKeyframes) =
            all.middleRows(Eigen::Index(fit_records[j]) * kKeyframes, kKeyframes);
    }
    // Columns that are zero on the fit subset carry no variance; the model
    // keeps them with zero loadings so the full column set still projects.
    PreparedData out;
    out.labels = data.labels;
    out.ids = data.ids;
    out.pca = pca_fit(fm, variability);
    out.pca.kept_indices = data.pca.kept_indices;
    out.pca.input_dim = data.pca.input_dim;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.inputs.push_back(detail::project_block(out.pca, all.middleRows(Eigen::Index(i) * kKeyframes, kKeyframes)));
    }
    return out;
}

// --- experiment -------------------------------------------------------------

enum class ReadoutMode {
    /// Concatenated states at the timesteps of interest.
    toi,
    /// Per-timestep readout with outputs averaged over the sequence.
    classical_average,
};

struct ExperimentConfig {
    ReservoirConfig reservoir;
    /// When set, beta is chosen per mask so that std(beta M u) equals it.
    std::optional<double> sigma_input;
    ToiSet toi{{1, 5, 8, 9, 10}};
    double lambda = 1e-3;
    /// When set, lambda = lambda_rescaled * VAR(training states) per cell.
    std::optional<double> lambda_rescaled;
    int k_folds = 4;
    std::uint64_t fold_seed = 1;
    SplitMode split = SplitMode::stratified;
    std::vector<std::uint64_t> mask_seeds{1, 2, 3, 4, 5};
    bool reset = true;
    /// Readout directly on the PCA features, no reservoir.
    bool baseline = false;
    ReadoutMode readout = ReadoutMode::toi;
    bool bias = false;
    /// Refit PCA on each training split (leakage-safe variant).
    bool pca_per_fold = false;
    double variability = 0.75;
    /// Wall-clock fields are zero when false, which keeps reports reproducible.
    bool timing = false;

    void validate() const
    {
        reservoir.validate();
        if (mask_seeds.empty()) {
            throw UsageError("at least one mask seed is required");
        }
        if (k_folds < 2) {
            throw UsageError("k_folds must be >= 2");
        }
        if (sigma_input && !(*sigma_input >= 0.0)) {
            throw UsageError("sigma_input must be >= 0");
        }
        if (lambda_rescaled && !(*lambda_rescaled >= 0.0)) {
            throw UsageError("lambda_rescaled must be >= 0");
        }
        if (!(lambda >= 0.0)) {
            throw UsageError("lambda must be >= 0");
        }
    }
};

using Confusion = std::array<std::array<std::size_t, kClasses>, kClasses>;

/// counts[true][predicted].
inline Confusion confusion_matrix(std::span<const int> predicted, std::span<const int> labels)
{
    if (predicted.size() != labels.size()) {
        throw DataError("prediction and label counts differ");
    }
    Confusion c{};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= kClasses || predicted[i] < 0 || predicted[i] >= kClasses) {
            throw DataError("class index out of range at sample " + std::to_string(i));
        }
        ++c[std::size_t(labels[i])][std::size_t(predicted[i])];
    }
    return c;
}

inline std::size_t confusion_trace(const Confusion& c)
{
    std::size_t t = 0;
    for (int i = 0; i < kClasses; ++i) {
        t += c[std::size_t(i)][std::size_t(i)];
    }
    return t;
}

inline std::size_t confusion_total(const Confusion& c)
{
    std::size_t t = 0;
    for (const auto& row : c) {
        for (auto v : row) {
            t += v;
        }
    }
    return t;
}

struct SamplePrediction {
    std::size_t record = 0;
    std::uint64_t mask_seed = 0;
    int fold = 0;
    int label = 0;
    int predicted = 0;
};

struct CellResult {
    std::uint64_t mask_seed = 0;
    int fold = 0;
    std::size_t correct = 0;
    std::size_t total = 0;
    double beta = 0.0;
    double lambda = 0.0;
    HyperDiagnostics diagnostics;

    double accuracy() const { return total ? double(correct) / double(total) : 0.0; }
};

struct ExperimentReport {
    /// Mean and sample std over the (mask, fold) cells.
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    /// Std of the per-mask means and of the per-fold means.
    double std_over_masks = 0.0;
    double std_over_folds = 0.0;
    /// trace(confusion) / total over every test prediction of every cell.
    double pooled_accuracy = 0.0;
    Confusion confusion{};
    std::vector<CellResult> cells;
    std::vector<SamplePrediction> predictions;
    double fps_inference = 0.0;
    double fps_end_to_end = 0.0;
    /// Mean wall time per cell spent on states and readout fitting.
    double train_seconds = 0.0;
    Eigen::Index pca_components = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline double sample_std(std::span<const double> v)
{
    if (v.size() < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= double(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / double(v.size() - 1));
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Per-record trajectories; without reset one state carries through the
/// records in index order.
inline std::vector<RowMatrix> trajectories(const ReservoirConfig& cfg, const InputMask& mask,
                                           const std::vector<RowMatrix>& inputs, bool reset)
{
    std::vector<RowMatrix> out;
    out.reserve(inputs.size());
    ReservoirState state = ReservoirState::zero(cfg.nodes);
    for (const auto& u : inputs) {
        out.push_back(run_sequence(cfg, mask, u, state, reset, kKeyframes).states);
    }
    return out;
}

/// Readout feature vector of one sequence.
inline Vector readout_vector(const RowMatrix& states, const ToiSet& toi) { return concat_toi(states, toi); }

inline std::vector<RowMatrix> subset(const std::vector<RowMatrix>& all, std::span<const std::size_t> idx)
{
    std::vector<RowMatrix> out;
    out.reserve(idx.size());
    for (auto i : idx) {
        out.push_back(all[i]);
    }
    return out;
}

/// Fitted readout for one cell plus its class decisions on test sequences.
struct CellReadout {
    Matrix weights;
    bool bias = false;
    ReadoutMode mode = ReadoutMode::toi;
    ToiSet toi;

    int classify(const RowMatrix& states) const
    {
        if (mode == ReadoutMode::toi) {
            Vector v = concat_toi(states, toi);
            Vector y = weights.leftCols(v.size()) * v;
            if (bias) {
                y += weights.col(v.size());
            }
            return argmax_lowest(y);
        }
        Vector y = Vector::Zero(weights.rows());
        for (Eigen::Index t = 0; t < states.rows(); ++t) {
            y += weights.leftCols(states.cols()) * states.row(t).transpose();
            if (bias) {
                y += weights.col(states.cols());
            }
        }
        return argmax_lowest(y);
    }
};

inline CellReadout fit_readout(const std::vector<RowMatrix>& states, std::span<const std::size_t> train,
                               std::span<const int> labels, const ExperimentConfig& cfg, double lambda)
{
    DesignMatrix d;
    if (cfg.readout == ReadoutMode::toi) {
        std::vector<Vector> rows;
        std::vector<int> y;
        for (auto i : train) {
            rows.push_back(concat_toi(states[i], cfg.toi));
            y.push_back(labels[i]);
        }
        d = make_design(rows, y, kClasses);
    } else {
        std::vector<Vector> rows;
        std::vector<int> y;
        for (auto i : train) {
            for (Eigen::Index t = 0; t < states[i].rows(); ++t) {
                rows.push_back(states[i].row(t).transpose());
                y.push_back(labels[i]);
            }
        }
        d = make_design(rows, y, kClasses);
    }
    RidgeOptions opts;
    opts.bias = cfg.bias;
    return {ridge_weights(d, lambda, opts), cfg.bias, cfg.readout, cfg.toi};
}

} // namespace detail

/// Runs the (mask seed x fold) grid on prepared features.
///
/// Cells run in fixed order (masks outer, folds inner) and the report
/// aggregates them in that order. With baseline set the readout sees the
/// PCA inputs directly and only the first mask seed is used.
inline ExperimentReport run_experiment(const PreparedData& data, const ExperimentConfig& cfg,
                                       const std::vector<FoldSplit>& folds)
{
    cfg.validate();
    if (data.size() == 0) {
        throw DataError("no records to evaluate");
    }
    ExperimentReport rep;
    rep.pca_components = data.pca.size();
    {
        std::vector<char> present(kClasses, 0);
        for (int l : data.labels) {
            present[std::size_t(l)] = 1;
        }
        if (std::count(present.begin(), present.end(), 1) < 2) {
            rep.warnings.push_back("single-class data: the confusion matrix is degenerate");
        }
    }
    const std::vector<std::uint64_t> seeds =
        cfg.baseline ? std::vector<std::uint64_t>{cfg.mask_seeds.front()} : cfg.mask_seeds;

    double train_time = 0.0;
    std::optional<PreparedData> fold_data;
    for (std::uint64_t seed : seeds) {
        // Shared-PCA trajectories are reused across folds.
        std::vector<RowMatrix> shared_states;
        std::optional<InputMask> shared_mask;
        double shared_beta = cfg.reservoir.beta;
        for (const auto& fold : folds) {
            const std::string where = "(mask seed " + std::to_string(seed) + ", fold " + std::to_string(fold.fold_index) + ")";
            try {
                const PreparedData* d = &data;
                if (cfg.pca_per_fold) {
                    fold_data = refit_pca(data, fold.train_indices, cfg.variability);
                    d = &*fold_data;
                }
                const auto t0 = std::chrono::steady_clock::now();
                CellResult cell;
                cell.mask_seed = seed;
                cell.fold = fold.fold_index;
                const std::vector<RowMatrix>* states = &d->inputs;
                std::vector<RowMatrix> local_states;
                InputMask mask;
                if (!cfg.baseline) {
                    const bool reuse = !cfg.pca_per_fold && shared_mask;
                    if (!reuse) {
                        ReservoirConfig rc = cfg.reservoir;
                        rc.mask_seed = seed;
                        mask = generate_mask(rc.nodes, int(d->input_dim()), seed);
                        if (cfg.sigma_input) {
                            const double unit = input_spread(1.0, mask, d->inputs);
                            if (!(unit > 0.0)) {
                                throw NumericError("reservoir inputs have zero spread");
                            }
                            rc.beta = *cfg.sigma_input / unit;
                        }
                        auto st = detail::trajectories(rc, mask, d->inputs, cfg.reset);
                        if (cfg.pca_per_fold) {
                            local_states = std::move(st);
                        } else {
                            shared_states = std::move(st);
                            shared_mask = mask;
                        }
                        shared_beta = rc.beta;
                    } else {
                        mask = *shared_mask;
                    }
                    states = cfg.pca_per_fold ? &local_states : &shared_states;
                    cell.beta = shared_beta;
                }
                // Lambda from the training states (or training inputs for the baseline).
                const auto train_states = detail::subset(*states, fold.train_indices);
                cell.lambda = cfg.lambda;
                if (cfg.lambda_rescaled) {
                    const double var = entry_moments(train_states).second;
                    if (!(var > 0.0)) {
                        throw NumericError("training states have zero variance");
                    }
                    cell.lambda = *cfg.lambda_rescaled * var;
                }
                if (!cfg.baseline) {
                    const auto train_inputs = detail::subset(d->inputs, fold.train_indices);
                    cell.diagnostics = rescaled_diagnostics(cell.beta, mask, train_inputs, train_states, cell.lambda);
                }
                const auto readout = detail::fit_readout(*states, fold.train_indices, data.labels, cfg, cell.lambda);
                train_time += detail::seconds_since(t0);
                for (auto i : fold.test_indices) {
                    const int pred = readout.classify((*states)[i]);
                    rep.predictions.push_back({i, seed, fold.fold_index, data.labels[i], pred});
                    cell.correct += pred == data.labels[i];
                    ++cell.total;
                }
                rep.cells.push_back(cell);
            } catch (const Error& e) {
                rethrow_with_context(e, where);
            }
        }
    }

    std::vector<double> acc;
    std::map<std::uint64_t, std::vector<double>> by_mask;
    std::map<int, std::vector<double>> by_fold;
    for (const auto& c : rep.cells) {
        acc.push_back(c.accuracy());
        by_mask[c.mask_seed].push_back(c.accuracy());
        by_fold[c.fold].push_back(c.accuracy());
    }
    double sum = 0.0;
    for (double a : acc) {
        sum += a;
    }
    rep.mean_accuracy = sum / double(acc.size());
    rep.std_accuracy = detail::sample_std(acc);
    auto marginal = [](const auto& groups) {
        std::vector<double> means;
        for (const auto& [k, v] : groups) {
            double s = 0.0;
            for (double a : v) {
                s += a;
            }
            means.push_back(s / double(v.size()));
        }
        return detail::sample_std(means);
    };
    rep.std_over_masks = marginal(by_mask);
    rep.std_over_folds = marginal(by_fold);
    std::vector<int> pred, lab;
    for (const auto& p : rep.predictions) {
        pred.push_back(p.predicted);
        lab.push_back(p.label);
    }
    rep.confusion = confusion_matrix(pred, lab);
    rep.pooled_accuracy = double(confusion_trace(rep.confusion)) / double(confusion_total(rep.confusion));
    if (cfg.timing) {
        rep.train_seconds = train_time / double(rep.cells.size());
    }
    return rep;
}

/// Same pipeline with the reservoir removed.
inline ExperimentReport baseline_linear(const PreparedData& data, ExperimentConfig cfg,
                                        const std::vector<FoldSplit>& folds)
{
    cfg.baseline = true;
    return run_experiment(data, cfg, folds);
}

// --- inference pipeline and throughput --------------------------------------

/// Everything needed to classify a sequence after training.
struct InferencePipeline {
    PreprocessParams preprocess;
    HogParams hog;
    PcaModel pca;
    ReservoirConfig reservoir;
    InputMask mask;
    ReadoutModel readout;
    bool baseline = false;

    RowMatrix features(const KeyframeSet& k) const
    {
        RowMatrix u(kKeyframes, pca.size());
        for (int f = 0; f < kKeyframes; ++f) {
            const auto h = toirc::hog(k.frames[std::size_t(f)], hog);
            u.row(f) = pca_transform(pca, Eigen::Map<const Vector>(h.data(), Eigen::Index(h.size()))).transpose();
        }
        return u;
    }

    int classify_keyframes(const KeyframeSet& k) const
    {
        const RowMatrix u = features(k);
        if (baseline) {
            return classify(readout, concat_toi(u, readout.toi));
        }
        const auto t = run_sequence(reservoir, mask, u, kKeyframes);
        return classify(readout, concat_toi(t, readout.toi));
    }

    int classify_frames(std::span<const GrayFrame> frames, const GrayFrame& background) const
    {
        return classify_keyframes(preprocess_frames(frames, background, preprocess));
    }
};

/// Fits the readout of an InferencePipeline on the given records.
inline InferencePipeline train_pipeline(const PreparedData& data, std::span<const std::size_t> train,
                                        const ExperimentConfig& cfg, std::uint64_t mask_seed,
                                        const HogParams& hog_params, const PreprocessParams& pre)
{
    cfg.validate();
    if (cfg.readout != ReadoutMode::toi) {
        throw UsageError("inference pipelines use the TOI readout");
    }
    InferencePipeline p;
    p.preprocess = pre;
    p.hog = hog_params;
    p.pca = data.pca;
    p.reservoir = cfg.reservoir;
    p.reservoir.mask_seed = mask_seed;
    p.baseline = cfg.baseline;
    std::vector<RowMatrix> states = data.inputs;
    if (!cfg.baseline) {
        p.mask = generate_mask(p.reservoir.nodes, int(data.input_dim()), mask_seed);
        if (cfg.sigma_input) {
            p.reservoir.beta = *cfg.sigma_input / input_spread(1.0, p.mask, data.inputs);
        }
        // Throughput models always reset so sequences are independent.
        states = detail::trajectories(p.reservoir, p.mask, data.inputs, true);
    }
    double lambda = cfg.lambda;
    if (cfg.lambda_rescaled) {
        lambda = *cfg.lambda_rescaled * entry_moments(detail::subset(states, train)).second;
    }
    std::vector<Vector> rows;
    std::vector<int> y;
    for (auto i : train) {
        rows.push_back(concat_toi(states[i], cfg.toi));
        y.push_back(data.labels[i]);
    }
    RidgeOptions opts;
    opts.bias = cfg.bias;
    p.readout = train_ridge(make_design(rows, y, kClasses), lambda, cfg.toi,
                            cfg.baseline ? int(data.input_dim()) : p.reservoir.nodes, opts);
    return p;
}

struct Throughput {
    /// Median over runs.
    double fps = 0.0;
    std::vector<double> run_fps;
    std::size_t frames_per_run = 0;
};

/// Frames per second of `process` (which handles one sequence of
/// frames_per_sequence frames), cycling through `sequences` items until at
/// least min_frames frames per run; median of `runs` runs.
inline Throughput measure_throughput(const std::function<void(std::size_t)>& process, std::size_t sequences,
                                     int frames_per_sequence = kKeyframes, std::size_t min_frames = 1000,
                                     int runs = 5)
{
    if (sequences == 0 || frames_per_sequence < 1 || runs < 1) {
        throw UsageError("throughput needs sequences, frames and runs");
    }
    const std::size_t per_run =
        (min_frames + std::size_t(frames_per_sequence) - 1) / std::size_t(frames_per_sequence);
    Throughput t;
    t.frames_per_run = per_run * std::size_t(frames_per_sequence);
    for (int r = 0; r < runs; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t s = 0; s < per_run; ++s) {
            process(s % sequences);
        }
        const double dt = std::max(detail::seconds_since(t0), 1e-12);
        t.run_fps.push_back(double(t.frames_per_run) / dt);
    }
    auto sorted = t.run_fps;
    std::sort(sorted.begin(), sorted.end());
    t.fps = sorted.size() % 2 ? sorted[sorted.size() / 2]
                              : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    return t;
}

// --- report output ----------------------------------------------------------

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Machine-readable line: "mean_acc std_acc fps train_s confusion[36] config_hash".
inline std::string report_kv(const ExperimentReport& r, const std::string& config_hash)
{
    std::ostringstream out;
    out << "mean_acc=" << format_double(r.mean_accuracy) << '\n';
    out << "std_acc=" << format_double(r.std_accuracy) << '\n';
    out << "fps=" << format_double(r.fps_inference) << '\n';
    out << "train_s=" << format_double(r.train_seconds) << '\n';
    out << "confusion=";
    for (int i = 0; i < kClasses; ++i) {
        for (int j = 0; j < kClasses; ++j) {
            out << (i || j ? "," : "") << r.confusion[std::size_t(i)][std::size_t(j)];
        }
    }
    out << '\n';
    out << "config_hash=" << config_hash << '\n';
    return out.str();
}

inline std::string format_confusion(const Confusion& c, std::span<const std::string> names)
{
    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-14s", "true\\pred");
    out << buf;
    for (int j = 0; j < kClasses; ++j) {
        std::snprintf(buf, sizeof buf, "%8.8s", names[std::size_t(j)].c_str());
        out << buf;
    }
    out << '\n';
    for (int i = 0; i < kClasses; ++i) {
        std::snprintf(buf, sizeof buf, "%-14s", names[std::size_t(i)].c_str());
        out << buf;
        for (int j = 0; j < kClasses; ++j) {
            std::snprintf(buf, sizeof buf, "%8zu", c[std::size_t(i)][std::size_t(j)]);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

/// Human-readable report.
inline std::string report_text(const ExperimentReport& r, const std::string& config_hash,
                               std::span<const std::string> class_names)
{
    std::ostringstream out;
    char buf[160];
    out << "config_hash " << config_hash << '\n';
    std::snprintf(buf, sizeof buf, "cells %zu  pca_components %ld\n", r.cells.size(), long(r.pca_components));
    out << buf;
    std::snprintf(buf, sizeof buf, "accuracy mean %.4f  std %.4f  (std over masks %.4f, over folds %.4f)\n",
                  r.mean_accuracy, r.std_accuracy, r.std_over_masks, r.std_over_folds);
    out << buf;
    std::snprintf(buf, sizeof buf, "pooled accuracy %.4f\n", r.pooled_accuracy);
    out << buf;
    out << "cells:\n";
    for (const auto& c : r.cells) {
        std::snprintf(buf, sizeof buf,
                      "  mask %llu fold %d  acc %.4f (%zu/%zu)  beta %.6g lambda %.6g sigma_input %.6g lambda/var %.6g\n",
                      static_cast<unsigned long long>(c.mask_seed), c.fold, c.accuracy(), c.correct, c.total, c.beta,
                      c.lambda, c.diagnostics.sigma_input, c.diagnostics.lambda_rescaled);
        out << buf;
    }
    out << "confusion (pooled test predictions):\n" << format_confusion(r.confusion, class_names);
    std::snprintf(buf, sizeof buf, "fps inference %.1f  end-to-end %.1f  train_s %.4f\n", r.fps_inference,
                  r.fps_end_to_end, r.train_seconds);
    out << buf;
    for (const auto& w : r.warnings) {
        out << "warning: " << w << '\n';
    }
    return out.str();
}

} // namespace toirc
