#include "pdeinv/linalg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pdeinv/error.hpp"

namespace pdeinv {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    CsrMatrix m(rows, cols);
    m.col_idx_.reserve(entries.size());
    m.values_.reserve(entries.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        while (k < entries.size() && entries[k].row == i) {
            if (entries[k].col >= cols) throw InvalidArgument("CsrMatrix: column index out of range");
            const std::size_t c = entries[k].col;
            double v = 0.0;
            while (k < entries.size() && entries[k].row == i && entries[k].col == c) v += entries[k++].value;
            m.col_idx_.push_back(c);
            m.values_.push_back(v);
        }
        m.row_ptr_[i + 1] = m.col_idx_.size();
    }
    if (k != entries.size()) throw InvalidArgument("CsrMatrix: row index out of range");
    return m;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    CsrMatrix m(n, n);
    m.col_idx_.resize(n);
    m.values_.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        m.col_idx_[i] = i;
        m.row_ptr_[i + 1] = i + 1;
    }
    return m;
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
        y[i] = s;
    }
}

Vec CsrMatrix::multiply(std::span<const double> x) const {
    if (x.size() != cols_) throw InvalidArgument("CsrMatrix::multiply: size mismatch");
    Vec y(rows_);
    multiply(x, y);
    return y;
}

void CsrMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * xi;
    }
}

Vec CsrMatrix::multiply_transpose(std::span<const double> x) const {
    if (x.size() != rows_) throw InvalidArgument("CsrMatrix::multiply_transpose: size mismatch");
    Vec y(cols_);
    multiply_transpose(x, y);
    return y;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({col_idx_[k], i, values_[k]});
    return from_triplets(cols_, rows_, std::move(t));
}

DenseMatrix CsrMatrix::to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_idx_[k]) += values_[k];
    return d;
}

Vec CsrMatrix::diagonal() const {
    Vec d(std::min(rows_, cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
}

bool CsrMatrix::is_symmetric(double rel_tol) const {
    if (rows_ != cols_) return false;
    double amax = 0.0;
    for (double v : values_) amax = std::max(amax, std::abs(v));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (std::abs(values_[k] - at(col_idx_[k], i)) > rel_tol * amax) return false;
    return true;
}

CsrMatrix CsrMatrix::times_transpose(const CsrMatrix& other) const {
    if (cols_ != other.cols_) throw InvalidArgument("times_transpose: column counts differ");
    // (A B^T)_ij = sum_k A_ik B_jk; walk B^T column-wise through the transpose.
    const CsrMatrix bt = other.transpose();  // cols_ x other.rows_
    std::vector<Triplet> out;
    std::map<std::size_t, double> acc;
    for (std::size_t i = 0; i < rows_; ++i) {
        acc.clear();
        for (std::size_t a = row_ptr_[i]; a < row_ptr_[i + 1]; ++a) {
            const std::size_t k = col_idx_[a];
            const double aik = values_[a];
            for (std::size_t b = bt.row_ptr_[k]; b < bt.row_ptr_[k + 1]; ++b) acc[bt.col_idx_[b]] += aik * bt.values_[b];
        }
        for (const auto& [j, v] : acc) out.push_back({i, j, v});
    }
    return from_triplets(rows_, other.rows_, std::move(out));
}

CsrMatrix CsrMatrix::add(double alpha, const CsrMatrix& other, double beta) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw InvalidArgument("CsrMatrix::add: shape mismatch");
    std::vector<Triplet> t;
    t.reserve(nnz() + other.nnz());
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({i, col_idx_[k], alpha * values_[k]});
        for (std::size_t k = other.row_ptr_[i]; k < other.row_ptr_[i + 1]; ++k)
            t.push_back({i, other.col_idx_[k], beta * other.values_[k]});
    }
    return from_triplets(rows_, cols_, std::move(t));
}

double relative_difference(const CsrMatrix& a, const CsrMatrix& b) {
    const CsrMatrix d = a.add(1.0, b, -1.0);
    const double ref = norm2(b.values());
    const double diff = norm2(d.values());
    return ref > 0.0 ? diff / ref : diff;
}

}  // namespace pdeinv
