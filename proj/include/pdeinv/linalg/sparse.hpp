#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pdeinv/linalg/dense.hpp"
#include "pdeinv/linalg/vector.hpp"

namespace pdeinv {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix. Finite-element matrices (mass, stiffness,
/// precision factors) are assembled symmetrically into this type; observation
/// operators and rectangular factors use it as a general sparse matrix.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

    /// Duplicate entries are summed; column indices are sorted within each row.
    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
    static CsrMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    [[nodiscard]] std::span<const std::size_t> col_idx() const { return col_idx_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    /// Entry lookup (0 when not stored).
    [[nodiscard]] double at(std::size_t i, std::size_t j) const;

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] Vec multiply(std::span<const double> x) const;
    /// y = A^T x
    void multiply_transpose(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] Vec multiply_transpose(std::span<const double> x) const;

    [[nodiscard]] CsrMatrix transpose() const;
    [[nodiscard]] DenseMatrix to_dense() const;
    [[nodiscard]] Vec diagonal() const;
    [[nodiscard]] bool is_symmetric(double rel_tol = 0.0) const;

    /// this * other^T, computed sparsely.
    [[nodiscard]] CsrMatrix times_transpose(const CsrMatrix& other) const;

    /// alpha * this + beta * other (same shape).
    [[nodiscard]] CsrMatrix add(double alpha, const CsrMatrix& other, double beta) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Symmetric sparse matrices share the CSR storage; the alias marks intent.
using SparseSym = CsrMatrix;

/// Relative Frobenius distance ||a - b||_F / ||b||_F between two sparse
/// matrices of equal shape.
double relative_difference(const CsrMatrix& a, const CsrMatrix& b);

}  // namespace pdeinv
