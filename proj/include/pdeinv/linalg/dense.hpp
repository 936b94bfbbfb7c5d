#pragma once

// Small dense kernels used by the randomized eigensolvers. Sizes are
// expected to stay in the few-hundred range (r + l columns), so everything
// is unblocked and column-major.

#include <cstddef>
#include <span>
#include <vector>

#include "pdeinv/linalg/vector.hpp"

namespace pdeinv {

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> d);
    static DenseMatrix from_rows(std::size_t rows, std::size_t cols,
                                 std::span<const double> row_major);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
    [[nodiscard]] std::span<const double> col(std::size_t j) const {
        return {data_.data() + j * rows_, rows_};
    }

    [[nodiscard]] Vec column(std::size_t j) const {
        auto c = col(j);
        return {c.begin(), c.end()};
    }
    void set_column(std::size_t j, std::span<const double> v);

    [[nodiscard]] DenseMatrix transpose() const;
    [[nodiscard]] DenseMatrix leading_columns(std::size_t k) const;

    [[nodiscard]] std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);
Vec operator*(const DenseMatrix& a, std::span<const double> x);

/// a^T b without forming the transpose.
DenseMatrix transpose_times(const DenseMatrix& a, const DenseMatrix& b);
/// a^T x
Vec transpose_times(const DenseMatrix& a, std::span<const double> x);

double frobenius_norm(const DenseMatrix& a);
/// ||a - b||_F / ||b||_F (absolute when b vanishes).
double relative_difference(const DenseMatrix& a, const DenseMatrix& b);
/// max |a_ij - a_ji| relative to max |a_ij|.
double asymmetry(const DenseMatrix& a);

/// Lower-triangular Cholesky factor L with L L^T = A.
/// Throws NotPositiveDefinite carrying the failing pivot index.
DenseMatrix dense_cholesky(const DenseMatrix& a);

struct QrFactors {
    DenseMatrix q;  // rows x cols, orthonormal columns
    DenseMatrix r;  // cols x cols, upper triangular with non-negative diagonal
};

/// Thin Householder QR of a tall matrix. Throws RankDeficient naming the
/// first dependent column.
QrFactors dense_qr(const DenseMatrix& y);

struct EigenDecomposition {
    Vec values;           // descending
    DenseMatrix vectors;  // orthonormal columns, same order as values
};

/// Symmetric eigendecomposition via Householder tridiagonalization and
/// implicit QL. Input asymmetry up to 1e-10 (relative) is symmetrized away;
/// anything larger is rejected.
EigenDecomposition dense_eigh(const DenseMatrix& t);

struct SvdFactors {
    DenseMatrix u;  // rows x k
    Vec sigma;      // descending, length k = min(rows, cols)
    DenseMatrix v;  // cols x k
};

/// One-sided Jacobi SVD.
SvdFactors dense_svd(const DenseMatrix& a);

/// Moore-Penrose pseudo-inverse; singular values below cutoff * sigma_max
/// are treated as zero. `rank` receives the numerical rank when non-null.
DenseMatrix pseudo_inverse(const DenseMatrix& a, double cutoff = 1e-12,
                           std::size_t* rank = nullptr);

struct SymmetricLsResult {
    DenseMatrix x;
    std::size_t rank = 0;
    bool rank_deficient = false;
};

/// Symmetrized least-squares solution of X G ~= F:
/// X0 = F pinv(G), X = (X0 + X0^T) / 2.
SymmetricLsResult symmetric_ls_solve(const DenseMatrix& g, const DenseMatrix& f);

/// Solves L x = b in place (L lower triangular).
void forward_substitute(const DenseMatrix& l, std::span<double> b);
/// Solves L^T x = b in place (L lower triangular).
void backward_substitute_transpose(const DenseMatrix& l, std::span<double> b);
/// Solves U x = b in place (U upper triangular).
void backward_substitute(const DenseMatrix& u, std::span<double> b);

/// Inverse of an upper-triangular matrix.
DenseMatrix upper_triangular_inverse(const DenseMatrix& u);

/// Dense LU solve with partial pivoting for a square system (small sizes).
DenseMatrix lu_solve(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace pdeinv
