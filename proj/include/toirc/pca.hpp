#pragma once

// Zero-feature removal and covariance-method PCA for HOG feature matrices.

#include "binary_io.hpp"
#include "error.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace toirc {

struct FeatureRow {
    std::string record_id;
    int keyframe = 0;
};

/// One row per (sequence, keyframe).
struct FeatureMatrix {
    Matrix values;
    std::vector<FeatureRow> row_index;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

struct PcaModel {
    /// Length D (columns after zero removal).
    Vector mean;
    /// q x D, orthonormal rows.
    Matrix components;
    /// q values, descending.
    Vector eigenvalues;
    /// Sum of all covariance eigenvalues (the trace).
    double total_variance = 0.0;
    /// Original column of each of the D model columns.
    std::vector<Eigen::Index> kept_indices;
    /// Column count before zero removal.
    Eigen::Index input_dim = 0;
    double variability = 1.0;

    Eigen::Index dim() const { return mean.size(); }
    Eigen::Index size() const { return components.rows(); }
    double explained() const { return total_variance > 0.0 ? eigenvalues.sum() / total_variance : 0.0; }
};

/// Columns that are nonzero somewhere in X.
inline std::vector<Eigen::Index> nonzero_columns(const Matrix& x)
{
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if ((x.col(c).array() != 0.0).any()) {
            kept.push_back(c);
        }
    }
    return kept;
}

/// Drops the columns that are identically zero; returns the reduced matrix
/// and the original index of every kept column.
inline std::pair<FeatureMatrix, std::vector<Eigen::Index>> drop_zero_features(const FeatureMatrix& x)
{
    auto kept = nonzero_columns(x.values);
    if (kept.empty()) {
        throw NumericError("every feature column is zero");
    }
    FeatureMatrix out;
    out.row_index = x.row_index;
    out.values.resize(x.rows(), Eigen::Index(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) {
        out.values.col(Eigen::Index(j)) = x.values.col(kept[j]);
    }
    return {std::move(out), std::move(kept)};
}

/// Streaming first and second moments, shifted by the first block's mean to
/// limit cancellation. Blocks are folded in call order.
class MomentAccumulator {
public:
    explicit MomentAccumulator(Eigen::Index dim) : shift_(Vector::Zero(dim)), sum_(Vector::Zero(dim)),
                                                  cross_(Matrix::Zero(dim, dim)) {}

    void add(const Matrix& block)
    {
        if (block.cols() != shift_.size()) {
            throw DataError("moment block has " + std::to_string(block.cols()) + " columns, expected " +
                            std::to_string(shift_.size()));
        }
        if (block.rows() == 0) {
            return;
        }
        if (rows_ == 0) {
            shift_ = block.colwise().mean().transpose();
        }
        const Matrix centered = block.rowwise() - shift_.transpose();
        sum_ += centered.colwise().sum().transpose();
        cross_.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
        rows_ += block.rows();
    }

    Eigen::Index rows() const { return rows_; }
    Vector mean() const { return shift_ + sum_ / double(rows_); }

    /// Sample covariance (n - 1 denominator), full symmetric.
    Matrix covariance() const
    {
        if (rows_ < 2) {
            throw NumericError("covariance needs at least 2 rows");
        }
        const Vector d = sum_ / double(rows_);
        Matrix c = cross_;
        c.selfadjointView<Eigen::Lower>().rankUpdate(d, -double(rows_));
        c /= double(rows_ - 1);
        return c.selfadjointView<Eigen::Lower>();
    }

private:
    Vector shift_;
    Vector sum_;
    Matrix cross_;
    Eigen::Index rows_ = 0;
};

namespace detail {

inline void check_variability(double v)
{
    if (!(v > 0.0 && v <= 1.0)) {
        throw UsageError("variability must lie in (0, 1], got " + std::to_string(v));
    }
}

/// Makes the largest-magnitude entry of every row positive (first on ties).
inline void fix_signs(Matrix& components)
{
    for (Eigen::Index r = 0; r < components.rows(); ++r) {
        Eigen::Index arg = 0;
        components.row(r).cwiseAbs().maxCoeff(&arg);
        if (components(r, arg) < 0.0) {
            components.row(r) *= -1.0;
        }
    }
}

/// Eigenvalues below this fraction of the largest count as numerical zeros.
inline constexpr double kRankTolerance = 1e-12;

/// Smallest q whose cumulative share of the total reaches variability.
inline Eigen::Index choose_components(const Vector& values, double variability, double& total)
{
    total = 0.0;
    const double floor = values.size() > 0 ? std::max(values(0), 0.0) * kRankTolerance : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) > floor) {
            total += values(i);
            rank = i + 1;
        }
    }
    if (rank == 0 || !(total > 0.0)) {
        throw NumericError("PCA input has rank 0");
    }
    double cum = 0.0;
    for (Eigen::Index i = 0; i < rank; ++i) {
        cum += values(i);
        if (cum >= variability * total) {
            return i + 1;
        }
    }
    return rank;
}

} // namespace detail

/// PCA from a covariance matrix and the data mean.
inline PcaModel pca_from_covariance(const Matrix& covariance, const Vector& mean, double variability)
{
    detail::check_variability(variability);
    auto eig = symmetric_eigen(covariance);
    PcaModel m;
    m.mean = mean;
    m.variability = variability;
    const Eigen::Index q = detail::choose_components(eig.values, variability, m.total_variance);
    m.eigenvalues = eig.values.head(q);
    m.components = eig.vectors.leftCols(q).transpose();
    detail::fix_signs(m.components);
    m.input_dim = mean.size();
    m.kept_indices.resize(std::size_t(mean.size()));
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        m.kept_indices[std::size_t(i)] = i;
    }
    return m;
}

/// Covariance-method PCA keeping the fewest leading components whose
/// explained-variance share reaches variability. Decomposes the D x D
/// covariance when rows > D, otherwise the rows x rows Gram matrix with
/// back-projection onto feature space.
inline PcaModel pca_fit(const FeatureMatrix& x, double variability)
{
    detail::check_variability(variability);
    const Eigen::Index n = x.rows(), d = x.cols();
    if (n < 2) {
        throw DataError("PCA needs at least 2 rows, got " + std::to_string(n));
    }
    if (!x.values.allFinite()) {
        throw NumericError("PCA input contains NaN or Inf");
    }
    if (n > d) {
        MomentAccumulator acc(d);
        acc.add(x.values);
        return pca_from_covariance(acc.covariance(), acc.mean(), variability);
    }
    PcaModel m;
    m.mean = x.values.colwise().mean().transpose();
    m.variability = variability;
    const Matrix centered = x.values.rowwise() - m.mean.transpose();
    Matrix gram = Matrix::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / double(n - 1));
    auto eig = symmetric_eigen(gram);
    const Eigen::Index q = detail::choose_components(eig.values, variability, m.total_variance);
    m.eigenvalues = eig.values.head(q);
    m.components.resize(q, d);
    for (Eigen::Index i = 0; i < q; ++i) {
        Vector axis = centered.transpose() * eig.vectors.col(i);
        axis /= axis.norm();
        m.components.row(i) = axis.transpose();
    }
    detail::fix_signs(m.components);
    m.input_dim = d;
    m.kept_indices.resize(std::size_t(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        m.kept_indices[std::size_t(i)] = i;
    }
    return m;
}

/// Drops zero columns, then fits; kept_indices refer to the columns of x.
inline PcaModel pca_fit_with_zero_removal(const FeatureMatrix& x, double variability)
{
    auto [reduced, kept] = drop_zero_features(x);
    PcaModel m = pca_fit(reduced, variability);
    m.kept_indices = std::move(kept);
    m.input_dim = x.cols();
    return m;
}

/// Projects a D-vector (or a full pre-removal vector of input_dim entries).
inline Vector pca_transform(const PcaModel& m, const Eigen::Ref<const Vector>& x)
{
    if (x.size() == m.dim()) {
        return m.components * (x - m.mean);
    }
    if (x.size() == m.input_dim) {
        Vector reduced(m.dim());
        for (Eigen::Index j = 0; j < m.dim(); ++j) {
            reduced(j) = x(m.kept_indices[std::size_t(j)]);
        }
        return m.components * (reduced - m.mean);
    }
    throw DataError("pca_transform: vector has " + std::to_string(x.size()) + " entries, model expects " +
                    std::to_string(m.dim()) + " (or " + std::to_string(m.input_dim) + " before zero removal)");
}

/// Maps reduced coordinates back to the D model columns.
inline Vector pca_reconstruct(const PcaModel& m, const Eigen::Ref<const Vector>& z)
{
    if (z.size() != m.size()) {
        throw DataError("pca_reconstruct: expected " + std::to_string(m.size()) + " coordinates");
    }
    return m.mean + m.components.transpose() * z;
}

// --- persistence ------------------------------------------------------------

/// Model file: header "input_dim D q variability total_variance params_hash",
/// then kept_indices (text line), then mean, eigenvalues, components (row-major)
/// as little-endian doubles.
inline void write_pca_model(const std::filesystem::path& path, const PcaModel& m, const std::string& params_hash)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.precision(17);
    out << m.input_dim << ' ' << m.dim() << ' ' << m.size() << ' ' << m.variability << ' ' << m.total_variance << ' '
        << params_hash << '\n';
    for (std::size_t i = 0; i < m.kept_indices.size(); ++i) {
        out << (i ? " " : "") << m.kept_indices[i];
    }
    out << '\n';
    write_f64_le(out, {m.mean.data(), std::size_t(m.mean.size())});
    write_f64_le(out, {m.eigenvalues.data(), std::size_t(m.eigenvalues.size())});
    const RowMatrix comps = m.components;
    write_f64_le(out, {comps.data(), std::size_t(comps.size())});
}

inline PcaModel read_pca_model(const std::filesystem::path& path, const std::string& expected_hash)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open PCA model " + path.string());
    }
    std::istringstream header(read_header_line(in, path.string()));
    PcaModel m;
    Eigen::Index d = 0, q = 0;
    std::string hash;
    header >> m.input_dim >> d >> q >> m.variability >> m.total_variance >> hash;
    if (!header || d <= 0 || q <= 0) {
        throw DataError("malformed PCA model header in " + path.string());
    }
    if (hash != expected_hash) {
        throw DataError("PCA model " + path.string() + " was built with params " + hash + ", expected " +
                        expected_hash);
    }
    std::istringstream idx(read_header_line(in, path.string()));
    m.kept_indices.resize(std::size_t(d));
    for (auto& k : m.kept_indices) {
        if (!(idx >> k)) {
            throw DataError("malformed kept_indices in " + path.string());
        }
    }
    m.mean.resize(d);
    m.eigenvalues.resize(q);
    RowMatrix comps(q, d);
    read_f64_le(in, {m.mean.data(), std::size_t(d)}, path.string());
    read_f64_le(in, {m.eigenvalues.data(), std::size_t(q)}, path.string());
    read_f64_le(in, {comps.data(), std::size_t(comps.size())}, path.string());
    m.components = comps;
    return m;
}

/// Feature cache: header "rows cols variability params_hash", row-major
/// little-endian doubles; the index file holds "record_id keyframe" per row.
inline void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& x, double variability,
                                const std::string& params_hash)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.precision(17);
    out << x.rows() << ' ' << x.cols() << ' ' << variability << ' ' << params_hash << '\n';
    const RowMatrix rows = x.values;
    write_f64_le(out, {rows.data(), std::size_t(rows.size())});
    std::ofstream idx(path.string() + ".index");
    if (!idx) {
        throw DataError("cannot write index for " + path.string());
    }
    for (const auto& r : x.row_index) {
        idx << r.record_id << ' ' << r.keyframe << '\n';
    }
}

inline FeatureMatrix read_feature_cache(const std::filesystem::path& path, const std::string& expected_hash)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open feature cache " + path.string());
    }
    std::istringstream header(read_header_line(in, path.string()));
    Eigen::Index rows = 0, cols = 0;
    double variability = 0.0;
    std::string hash;
    header >> rows >> cols >> variability >> hash;
    if (!header || rows <= 0 || cols <= 0) {
        throw DataError("malformed feature cache header in " + path.string());
    }
    if (hash != expected_hash) {
        throw DataError("feature cache " + path.string() + " was built with params " + hash + ", expected " +
                        expected_hash);
    }
    RowMatrix values(rows, cols);
    read_f64_le(in, {values.data(), std::size_t(values.size())}, path.string());
    FeatureMatrix x;
    x.values = values;
    std::ifstream idx(path.string() + ".index");
    if (!idx) {
        throw DataError("missing index file for " + path.string());
    }
    FeatureRow r;
    while (idx >> r.record_id >> r.keyframe) {
        x.row_index.push_back(r);
    }
    if (Eigen::Index(x.row_index.size()) != rows) {
        throw DataError("feature index of " + path.string() + " has " + std::to_string(x.row_index.size()) +
                        " rows, expected " + std::to_string(rows));
    }
    return x;
}

} // namespace toirc
