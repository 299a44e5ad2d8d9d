#pragma once

// Slow, direct reference implementations used as test oracles. None of them
// shares code with the library beyond the plain data types.

#include "toirc/image.hpp"
#include "toirc/linalg.hpp"
#include "toirc/random.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <vector>

namespace oracle {

using toirc::Matrix;
using toirc::RowMatrix;
using toirc::Vector;

/// HOG by an explicit loop over each cell's pixels, then every block gathered
/// and normalized on its own. Bins centered at k*180/bins, linear split.
inline std::vector<double> hog(const toirc::BinaryFrame& b, int cell = 8, int block = 2, int bins = 9,
                               double eps = 1e-6)
{
    auto px = [&](int x, int y) {
        x = x < 0 ? 0 : (x >= b.width ? b.width - 1 : x);
        y = y < 0 ? 0 : (y >= b.height ? b.height - 1 : y);
        return b.at(x, y) ? 1.0 : 0.0;
    };
    const int cx = b.width / cell, cy = b.height / cell;
    std::vector<std::vector<double>> hist(std::size_t(cx * cy), std::vector<double>(std::size_t(bins), 0.0));
    const double bw = 180.0 / bins;
    for (int j = 0; j < cy; ++j) {
        for (int i = 0; i < cx; ++i) {
            auto& h = hist[std::size_t(j * cx + i)];
            for (int y = j * cell; y < (j + 1) * cell; ++y) {
                for (int x = i * cell; x < (i + 1) * cell; ++x) {
                    const double gx = px(x + 1, y) - px(x - 1, y);
                    const double gy = px(x, y + 1) - px(x, y - 1);
                    const double mag = std::hypot(gx, gy);
                    if (mag == 0.0) {
                        continue;
                    }
                    double ang = std::atan2(gy, gx) * 180.0 / M_PI;
                    while (ang < 0.0) {
                        ang += 180.0;
                    }
                    while (ang >= 180.0) {
                        ang -= 180.0;
                    }
                    const int k0 = int(ang / bw);
                    const double t = ang / bw - k0;
                    h[std::size_t(k0 % bins)] += (1.0 - t) * mag;
                    h[std::size_t((k0 + 1) % bins)] += t * mag;
                }
            }
        }
    }
    std::vector<double> out;
    for (int j = 0; j + block <= cy; ++j) {
        for (int i = 0; i + block <= cx; ++i) {
            std::vector<double> v;
            for (int a = 0; a < block; ++a) {
                for (int c = 0; c < block; ++c) {
                    const auto& h = hist[std::size_t((j + a) * cx + i + c)];
                    v.insert(v.end(), h.begin(), h.end());
                }
            }
            double n2 = 0.0;
            for (double e : v) {
                n2 += e * e;
            }
            for (double e : v) {
                out.push_back(n2 == 0.0 ? 0.0 : e / std::sqrt(n2 + eps * eps));
            }
        }
    }
    return out;
}

/// Augmented-state simulator: z = [x(n); x(n-1)] evolves as
/// z(n+1) = [sin(A z(n) + beta M u(n)); x(n)] with an explicit N x 2N A.
/// delayed: node 0 reads x_{N-1}(n-1); otherwise x_{N-1}(n).
inline RowMatrix dense_reservoir(double alpha, double beta, const Matrix& mask, const RowMatrix& u, bool delayed)
{
    const Eigen::Index n = mask.rows();
    Matrix a = Matrix::Zero(n, 2 * n);
    for (Eigen::Index i = 1; i < n; ++i) {
        a(i, i - 1) = alpha;
    }
    if (delayed) {
        a(0, 2 * n - 1) = alpha;
    } else {
        a(0, n - 1) += alpha;
    }
    Vector z = Vector::Zero(2 * n);
    RowMatrix out(u.rows(), n);
    for (Eigen::Index t = 0; t < u.rows(); ++t) {
        const Vector pre = a * z + beta * mask * u.row(t).transpose();
        Vector next(2 * n);
        next.head(n) = pre.array().sin();
        next.tail(n) = z.head(n);
        z = next;
        out.row(t) = z.head(n).transpose();
    }
    return out;
}

/// Ridge weights (classes x features) from the explicitly inverted normal matrix.
inline Matrix ridge(const Matrix& x, const Matrix& targets, double lambda)
{
    const Matrix a = x.transpose() * x + lambda * Matrix::Identity(x.cols(), x.cols());
    return (a.fullPivLu().inverse() * x.transpose() * targets).transpose();
}

inline Matrix gaussian_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed)
{
    toirc::CounterRng rng(seed, 0x4F524143u);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            m(i, j) = rng.next_normal();
        }
    }
    return m;
}

/// Rows whose sample covariance is exactly Q diag(spectrum) Q^T for a random
/// orthogonal Q, with a nonzero mean.
inline Matrix prescribed_spectrum(const Vector& spectrum, Eigen::Index rows, std::uint64_t seed)
{
    const Eigen::Index d = spectrum.size();
    Matrix z = gaussian_matrix(rows, d, seed);
    z.rowwise() -= z.colwise().mean();
    const Matrix u = Eigen::HouseholderQR<Matrix>(z).householderQ() * Matrix::Identity(rows, d);
    const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian_matrix(d, d, seed + 1)).householderQ();
    Matrix x = std::sqrt(double(rows - 1)) * u * spectrum.cwiseSqrt().asDiagonal() * q.transpose();
    x.rowwise() += Vector::LinSpaced(d, 1.0, 2.0).transpose();
    return x;
}

/// Smallest q with sum of the first q values >= variability * total.
inline Eigen::Index forced_components(const Vector& spectrum, double variability)
{
    const double total = spectrum.sum();
    double cum = 0.0;
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
        cum += spectrum(i);
        if (cum >= variability * total) {
            return i + 1;
        }
    }
    return spectrum.size();
}

} // namespace oracle
