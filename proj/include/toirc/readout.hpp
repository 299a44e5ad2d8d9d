#pragma once

// Timesteps-Of-Interest readout: concatenate the reservoir states at selected
// timesteps, fit one ridge-regression output per class, classify by argmax.

#include "binary_io.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace toirc {

inline constexpr int kMaxToi = 10;

/// Nonempty, strictly increasing subset of the timesteps 1..10.
class ToiSet {
public:
    ToiSet() = default;

    explicit ToiSet(std::vector<int> indices) : indices_(std::move(indices))
    {
        if (indices_.empty() || indices_.size() > std::size_t(kMaxToi)) {
            throw UsageError("TOI set must hold 1..10 timesteps");
        }
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (indices_[i] < 1 || indices_[i] > kMaxToi) {
                throw UsageError("TOI " + std::to_string(indices_[i]) + " outside 1..10");
            }
            if (i > 0 && indices_[i] <= indices_[i - 1]) {
                throw UsageError("TOI indices must be strictly increasing");
            }
        }
    }

    /// "1,5,10"
    static ToiSet parse(const std::string& text)
    {
        std::vector<int> v;
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t pos = 0;
                v.push_back(std::stoi(tok, &pos));
                if (pos != tok.size()) {
                    throw std::invalid_argument(tok);
                }
            } catch (const std::exception&) {
                throw UsageError("malformed TOI list '" + text + "'");
            }
        }
        return ToiSet(std::move(v));
    }

    static ToiSet all() { return ToiSet({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}); }

    const std::vector<int>& indices() const { return indices_; }
    int size() const { return int(indices_.size()); }
    bool empty() const { return indices_.empty(); }

    std::string str() const
    {
        std::string s;
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            s += (i ? "," : "") + std::to_string(indices_[i]);
        }
        return s;
    }

    friend bool operator==(const ToiSet&, const ToiSet&) = default;
    friend bool operator<(const ToiSet& a, const ToiSet& b) { return a.indices_ < b.indices_; }

private:
    std::vector<int> indices_;
};

/// (x(t1), x(t2), ...) for the TOIs in ascending order.
inline Vector concat_toi(const Eigen::Ref<const RowMatrix>& states, const ToiSet& toi)
{
    const Eigen::Index n = states.cols();
    Vector v(Eigen::Index(toi.size()) * n);
    Eigen::Index offset = 0;
    for (int t : toi.indices()) {
        if (t > states.rows()) {
            throw DataError("TOI " + std::to_string(t) + " beyond trajectory length " + std::to_string(states.rows()));
        }
        v.segment(offset, n) = states.row(t - 1).transpose();
        offset += n;
    }
    return v;
}

inline Vector concat_toi(const Trajectory& traj, const ToiSet& toi) { return concat_toi(traj.states, toi); }

/// Samples x features with one-hot targets.
struct DesignMatrix {
    Matrix x;
    Matrix targets;
};

inline DesignMatrix make_design(std::span<const Vector> rows, std::span<const int> labels, int classes)
{
    if (rows.size() != labels.size() || rows.empty()) {
        throw DataError("design matrix needs matching, nonempty rows and labels");
    }
    DesignMatrix d;
    d.x.resize(Eigen::Index(rows.size()), rows[0].size());
    d.targets = Matrix::Zero(Eigen::Index(rows.size()), classes);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d.x.cols()) {
            throw DataError("design rows differ in length");
        }
        if (labels[i] < 0 || labels[i] >= classes) {
            throw DataError("label " + std::to_string(labels[i]) + " out of range");
        }
        d.x.row(Eigen::Index(i)) = rows[i].transpose();
        d.targets(Eigen::Index(i), labels[i]) = 1.0;
    }
    return d;
}

struct ReadoutModel {
    /// classes x features.
    Matrix weights;
    ToiSet toi;
    double lambda = 0.0;
    /// Nodes per TOI block (N, or K for the no-reservoir baseline).
    int nodes = 0;
    /// A constant 1 feature is appended to every input when set.
    bool bias = false;
    std::vector<std::string> class_names;

    int classes() const { return int(weights.rows()); }
};

struct RidgeOptions {
    bool bias = false;
    /// Relative reciprocal-condition floor below which lambda = 0 systems are singular.
    double singular_rcond = 1e-13;
};

namespace detail {

inline Matrix with_bias(const Matrix& x)
{
    Matrix out(x.rows(), x.cols() + 1);
    out.leftCols(x.cols()) = x;
    out.col(x.cols()).setOnes();
    return out;
}

} // namespace detail

/// Closed-form ridge weights w = (X^T X + lambda I)^{-1} X^T Y, one row per
/// class. One Cholesky factorization serves all class columns. With
/// lambda > 0 and fewer samples than features the identical solution is
/// taken from the dual system X^T (X X^T + lambda I)^{-1} Y.
inline Matrix ridge_weights(const DesignMatrix& d, double lambda, const RidgeOptions& opts = {})
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw UsageError("ridge lambda must be finite and >= 0");
    }
    if (d.x.rows() != d.targets.rows()) {
        throw DataError("design and target row counts differ");
    }
    if (!d.x.allFinite() || !d.targets.allFinite()) {
        throw NumericError("non-finite ridge inputs");
    }
    const Matrix x = opts.bias ? detail::with_bias(d.x) : d.x;
    const Eigen::Index n = x.rows(), f = x.cols();
    if (lambda > 0.0 && n < f) {
        Matrix gram = Matrix::Zero(n, n);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
        gram.diagonal().array() += lambda;
        Eigen::LLT<Matrix> llt(gram.selfadjointView<Eigen::Lower>());
        if (llt.info() != Eigen::Success) {
            throw NumericError("ridge dual system is not positive definite");
        }
        return (x.transpose() * llt.solve(d.targets)).transpose();
    }
    Matrix normal = Matrix::Zero(f, f);
    normal.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    normal.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(normal.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success || llt.rcond() < opts.singular_rcond) {
        throw NumericError("ridge system is singular (lambda=" + std::to_string(lambda) + ")");
    }
    return llt.solve(x.transpose() * d.targets).transpose();
}

inline ReadoutModel train_ridge(const DesignMatrix& d, double lambda, const ToiSet& toi, int nodes,
                                const RidgeOptions& opts = {})
{
    ReadoutModel m;
    m.weights = ridge_weights(d, lambda, opts);
    m.toi = toi;
    m.lambda = lambda;
    m.nodes = nodes;
    m.bias = opts.bias;
    return m;
}

/// The per-class outputs y_j = w_j . v.
inline Vector readout_outputs(const ReadoutModel& m, const Eigen::Ref<const Vector>& v)
{
    const Eigen::Index expected = m.weights.cols() - (m.bias ? 1 : 0);
    if (v.size() != expected) {
        throw DataError("readout input has " + std::to_string(v.size()) + " entries, model expects " +
                        std::to_string(expected));
    }
    Vector y = m.weights.leftCols(expected) * v;
    if (m.bias) {
        y += m.weights.col(expected);
    }
    return y;
}

/// Index of the largest entry; the lowest index wins ties.
inline int argmax_lowest(const Eigen::Ref<const Vector>& y)
{
    int best = 0;
    for (Eigen::Index j = 1; j < y.size(); ++j) {
        if (y(j) > y(best)) {
            best = int(j);
        }
    }
    return best;
}

/// Winner-takes-all class.
inline int classify(const ReadoutModel& m, const Eigen::Ref<const Vector>& v)
{
    return argmax_lowest(readout_outputs(m, v));
}

// --- TOI subset search ------------------------------------------------------

struct ToiScore {
    ToiSet toi;
    double accuracy = 0.0;
};

enum class ToiSearchMode { exhaustive, ranked };

namespace detail {

inline void sort_scores(std::vector<ToiScore>& s)
{
    std::stable_sort(s.begin(), s.end(), [](const ToiScore& a, const ToiScore& b) {
        if (a.accuracy != b.accuracy) {
            return a.accuracy > b.accuracy;
        }
        return a.toi < b.toi;
    });
}

inline void combinations(int start, int remaining, std::vector<int>& cur, std::vector<ToiSet>& out)
{
    if (remaining == 0) {
        out.emplace_back(cur);
        return;
    }
    for (int i = start; i <= kMaxToi - remaining + 1; ++i) {
        cur.push_back(i);
        combinations(i + 1, remaining - 1, cur, out);
        cur.pop_back();
    }
}

} // namespace detail

/// All C(10, t) subsets in lexicographic order.
inline std::vector<ToiSet> toi_subsets(int t)
{
    std::vector<ToiSet> out;
    std::vector<int> cur;
    detail::combinations(1, t, cur, out);
    return out;
}

/// Heuristic candidates built from an end timestep (10 or 9), a start
/// timestep (1 or 2) and a middle one (5, 4 or 6), truncated to t entries.
/// {10}, {1,10}, {1,5,10} lead their families.
inline std::vector<ToiSet> toi_heuristic_family(int t)
{
    std::vector<ToiSet> out;
    const int ends[] = {10, 9};
    const int starts[] = {1, 2};
    const int middles[] = {5, 4, 6};
    for (int mid : middles) {
        for (int first : starts) {
            for (int last : ends) {
                std::vector<int> v;
                if (t >= 2) {
                    v.push_back(first);
                }
                if (t >= 3) {
                    v.push_back(mid);
                }
                v.push_back(last);
                std::sort(v.begin(), v.end());
                ToiSet s(v);
                if (std::find(out.begin(), out.end(), s) == out.end()) {
                    out.push_back(s);
                }
            }
        }
    }
    // Keep the canonical (last, first, middle) choice at the front.
    std::stable_partition(out.begin(), out.end(), [&](const ToiSet& s) {
        const auto& ix = s.indices();
        return ix.back() == 10 && (t < 2 || ix.front() == 1) && (t < 3 || ix[1] == 5);
    });
    return out;
}

using ToiEvaluator = std::function<double(const ToiSet&)>;

/// Scores TOI subsets of size t.
///
/// Exhaustive mode evaluates every subset. Ranked mode evaluates the
/// start/middle/end heuristic family (for t <= 3), then grows the best set
/// greedily one timestep at a time until it has t entries. Results are sorted
/// by accuracy, ties by lexicographic subset. Only sets of size t are returned.
inline std::vector<ToiScore> toi_search(const ToiEvaluator& eval, int t, ToiSearchMode mode)
{
    if (t < 1 || t > kMaxToi) {
        throw UsageError("TOI subset size must be in 1..10");
    }
    std::vector<ToiScore> scores;
    if (mode == ToiSearchMode::exhaustive) {
        for (const auto& s : toi_subsets(t)) {
            scores.push_back({s, eval(s)});
        }
        detail::sort_scores(scores);
        return scores;
    }
    const int seed_size = std::min(t, 3);
    std::vector<ToiScore> seeds;
    for (const auto& s : toi_heuristic_family(seed_size)) {
        seeds.push_back({s, eval(s)});
    }
    detail::sort_scores(seeds);
    if (seed_size == t) {
        return seeds;
    }
    ToiSet best = seeds.front().toi;
    while (best.size() < t) {
        std::vector<ToiScore> grown;
        for (int idx = 1; idx <= kMaxToi; ++idx) {
            const auto& cur = best.indices();
            if (std::find(cur.begin(), cur.end(), idx) != cur.end()) {
                continue;
            }
            std::vector<int> v = cur;
            v.push_back(idx);
            std::sort(v.begin(), v.end());
            ToiSet s(v);
            grown.push_back({s, eval(s)});
        }
        detail::sort_scores(grown);
        best = grown.front().toi;
        if (best.size() == t) {
            scores = std::move(grown);
        }
    }
    return scores;
}

// --- model file -------------------------------------------------------------
//
// Header "C T N lambda toi...", then the C x F weights row-major as
// little-endian doubles (F = T*N, plus one when a bias column is present,
// flagged by a trailing "bias" token).

inline void write_readout_model(const std::filesystem::path& path, const ReadoutModel& m)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.precision(17);
    out << m.classes() << ' ' << m.toi.size() << ' ' << m.nodes << ' ' << m.lambda;
    for (int t : m.toi.indices()) {
        out << ' ' << t;
    }
    if (m.bias) {
        out << " bias";
    }
    out << '\n';
    const RowMatrix w = m.weights;
    write_f64_le(out, {w.data(), std::size_t(w.size())});
}

inline ReadoutModel read_readout_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open readout model " + path.string());
    }
    std::istringstream header(read_header_line(in, path.string()));
    int c = 0, t = 0;
    ReadoutModel m;
    header >> c >> t >> m.nodes >> m.lambda;
    if (!header || c <= 0 || t <= 0 || m.nodes <= 0) {
        throw DataError("malformed readout model header in " + path.string());
    }
    std::vector<int> toi(static_cast<std::size_t>(t));
    for (int& v : toi) {
        if (!(header >> v)) {
            throw DataError("malformed TOI list in " + path.string());
        }
    }
    m.toi = ToiSet(toi);
    std::string flag;
    m.bias = (header >> flag) && flag == "bias";
    RowMatrix w(c, Eigen::Index(t) * m.nodes + (m.bias ? 1 : 0));
    read_f64_le(in, {w.data(), std::size_t(w.size())}, path.string());
    m.weights = w;
    return m;
}

} // namespace toirc
