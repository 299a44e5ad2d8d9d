#pragma once

#include "error.hpp"

#include <Eigen/Dense>
#include <lapacke.h>

namespace toirc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SymmetricEigen {
    /// Descending.
    Vector values;
    /// Column j pairs with values(j).
    Matrix vectors;
};

/// Full eigendecomposition of a symmetric matrix (lower triangle is read)
/// through LAPACK's divide-and-conquer driver, reordered descending.
inline SymmetricEigen symmetric_eigen(Matrix a)
{
    const auto n = static_cast<lapack_int>(a.rows());
    if (a.rows() != a.cols()) {
        throw NumericError("symmetric_eigen: matrix is not square");
    }
    SymmetricEigen out;
    if (n == 0) {
        return out;
    }
    Vector w(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
    if (info != 0) {
        throw NumericError("LAPACK dsyevd failed with info=" + std::to_string(info));
    }
    out.values = w.reverse();
    out.vectors = a.rowwise().reverse();
    return out;
}

} // namespace toirc
