#pragma once

// Reference computations used only by tests. They are written independently
// of the library kernels (plain loops, cyclic Jacobi) so that agreement is a
// meaningful check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "pdeinv/linalg/dense.hpp"
#include "pdeinv/linalg/sparse.hpp"

namespace oracle {

using pdeinv::DenseMatrix;
using pdeinv::Vec;

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    DenseMatrix a(rows, cols);
    for (auto& v : a.data()) v = nd(gen);
    return a;
}

inline Vec random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    Vec v(n);
    for (auto& x : v) x = nd(gen);
    return v;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
            c(i, j) = static_cast<double>(s);
        }
    return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// Well-conditioned SPD matrix X^T X + n I.
inline DenseMatrix random_spd(std::size_t n, std::uint64_t seed, double shift = -1.0) {
    DenseMatrix x = random_matrix(n, n, seed);
    DenseMatrix a = matmul(transpose(x), x);
    const double s = shift < 0 ? static_cast<double>(n) : shift;
    for (std::size_t i = 0; i < n; ++i) a(i, i) += s;
    return a;
}

/// Random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
inline DenseMatrix random_orthogonal(std::size_t n, std::uint64_t seed) {
    DenseMatrix q = random_matrix(n, n, seed);
    for (std::size_t j = 0; j < n; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                double s = 0;
                for (std::size_t i = 0; i < n; ++i) s += q(i, k) * q(i, j);
                for (std::size_t i = 0; i < n; ++i) q(i, j) -= s * q(i, k);
            }
        double nrm = 0;
        for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
    }
    return q;
}

struct Eig {
    Vec values;           // descending
    DenseMatrix vectors;  // columns
};

/// Cyclic Jacobi rotations for a symmetric matrix.
inline Eig jacobi_eigh(DenseMatrix a) {
    const std::size_t n = a.rows();
    DenseMatrix v = DenseMatrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0, total = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                total += a(i, j) * a(i, j);
                if (i != j) off += a(i, j) * a(i, j);
            }
        if (off <= 1e-30 * total) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    Eig out{Vec(n), DenseMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(idx[k], idx[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, idx[k]);
    }
    return out;
}

/// Plain Cholesky (lower).
inline DenseMatrix cholesky(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = a(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        l(j, j) = std::sqrt(s);
        for (std::size_t i = j + 1; i < n; ++i) {
            double t = a(i, j);
            for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
            l(i, j) = t / l(j, j);
        }
    }
    return l;
}

/// Inverse by Gauss-Jordan with partial pivoting.
inline DenseMatrix inverse(DenseMatrix a) {
    const std::size_t n = a.rows();
    DenseMatrix inv = DenseMatrix::identity(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        for (std::size_t j = 0; j < n; ++j) {
            std::swap(a(k, j), a(p, j));
            std::swap(inv(k, j), inv(p, j));
        }
        const double d = a(k, k);
        for (std::size_t j = 0; j < n; ++j) {
            a(k, j) /= d;
            inv(k, j) /= d;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k) continue;
            const double f = a(i, k);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a(i, j) -= f * a(k, j);
                inv(i, j) -= f * inv(k, j);
            }
        }
    }
    return inv;
}

inline Vec solve(const DenseMatrix& a, const Vec& b) {
    const DenseMatrix inv = inverse(a);
    Vec x(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) x[i] += inv(i, j) * b[j];
    return x;
}

/// Generalized eigenpairs of A v = lambda B v by reduction with B = L L^T.
/// Eigenvectors are B-orthonormal, eigenvalues descending.
inline Eig ghep(const DenseMatrix& a, const DenseMatrix& b) {
    const DenseMatrix l = cholesky(b);
    const DenseMatrix linv = inverse(l);
    DenseMatrix c = matmul(matmul(linv, a), transpose(linv));
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j) c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));
    Eig e = jacobi_eigh(c);
    e.vectors = matmul(transpose(linv), e.vectors);
    return e;
}

inline double frob(const DenseMatrix& a) {
    double s = 0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

inline double rel_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double num = 0, den = 0;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        num += (a.data()[k] - b.data()[k]) * (a.data()[k] - b.data()[k]);
        den += b.data()[k] * b.data()[k];
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double rel_diff(const Vec& a, const Vec& b) {
    double num = 0, den = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - b[k]) * (a[k] - b[k]);
        den += b[k] * b[k];
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline DenseMatrix dense(const pdeinv::CsrMatrix& a) {
    DenseMatrix d(a.rows(), a.cols());
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto v = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) d(i, ci[k]) += v[k];
    return d;
}

}  // namespace oracle
