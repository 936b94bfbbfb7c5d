#include "pdeinv/linalg/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pdeinv/error.hpp"

namespace pdeinv {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::size_t rows, std::size_t cols,
                                   std::span<const double> row_major) {
    if (row_major.size() != rows * cols)
        throw InvalidArgument("from_rows: expected " + std::to_string(rows * cols) + " values");
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = row_major[i * cols + j];
    return m;
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> v) {
    std::copy(v.begin(), v.end(), col(j).begin());
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
        for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::leading_columns(std::size_t k) const {
    DenseMatrix out(rows_, k);
    std::copy(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(rows_ * k),
              out.data_.begin());
    return out;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("matrix product: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        auto cj = c.col(j);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double bkj = b(k, j);
            if (bkj == 0.0) continue;
            axpy(bkj, a.col(k), cj);
        }
    }
    return c;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c = a;
    axpy(1.0, b.data(), c.data());
    return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c = a;
    axpy(-1.0, b.data(), c.data());
    return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
    DenseMatrix c = a;
    scale(s, c.data());
    return c;
}

Vec operator*(const DenseMatrix& a, std::span<const double> x) {
    Vec y(a.rows(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) axpy(x[k], a.col(k), y);
    return y;
}

DenseMatrix transpose_times(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw InvalidArgument("transpose_times: row counts differ");
    DenseMatrix c(a.cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < a.cols(); ++i) c(i, j) = dot(a.col(i), b.col(j));
    return c;
}

Vec transpose_times(const DenseMatrix& a, std::span<const double> x) {
    Vec y(a.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) y[i] = dot(a.col(i), x);
    return y;
}

double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

double relative_difference(const DenseMatrix& a, const DenseMatrix& b) {
    const double diff = frobenius_norm(a - b);
    const double ref = frobenius_norm(b);
    return ref > 0.0 ? diff / ref : diff;
}

double asymmetry(const DenseMatrix& a) {
    double amax = 0.0, dmax = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) {
            amax = std::max(amax, std::abs(a(i, j)));
            if (i < a.cols() && j < a.rows()) dmax = std::max(dmax, std::abs(a(i, j) - a(j, i)));
        }
    return amax > 0.0 ? dmax / amax : 0.0;
}

DenseMatrix dense_cholesky(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw InvalidArgument("dense_cholesky: matrix is not square");
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0))
            throw NotPositiveDefinite(j, "dense_cholesky: non-positive pivot at index " +
                                             std::to_string(j));
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

QrFactors dense_qr(const DenseMatrix& y) {
    const std::size_t m = y.rows();
    const std::size_t n = y.cols();
    if (m < n) throw InvalidArgument("dense_qr: requires rows >= cols");

    double max_col = 0.0;
    for (std::size_t j = 0; j < n; ++j) max_col = std::max(max_col, norm2(y.col(j)));
    const double tol = 1e-12 * max_col;

    DenseMatrix a = y;
    std::vector<Vec> reflectors(n);
    DenseMatrix r(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        auto cj = a.col(j);
        double nrm = 0.0;
        for (std::size_t i = j; i < m; ++i) nrm += cj[i] * cj[i];
        nrm = std::sqrt(nrm);
        if (!(nrm > tol))
            throw RankDeficient(j, "dense_qr: column " + std::to_string(j) +
                                       " is numerically dependent on the previous columns");
        const double alpha = cj[j] > 0.0 ? -nrm : nrm;
        Vec v(m - j);
        for (std::size_t i = j; i < m; ++i) v[i - j] = cj[i];
        v[0] -= alpha;
        const double vn = norm2(v);
        if (vn > 0.0) scale(1.0 / vn, v);
        for (std::size_t k = j; k < n; ++k) {
            auto ck = a.col(k);
            double s = 0.0;
            for (std::size_t i = j; i < m; ++i) s += v[i - j] * ck[i];
            for (std::size_t i = j; i < m; ++i) ck[i] -= 2.0 * s * v[i - j];
        }
        for (std::size_t i = 0; i <= j; ++i) r(i, j) = a(i, j);
        reflectors[j] = std::move(v);
    }

    DenseMatrix q(m, n);
    for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
    for (std::size_t jj = n; jj-- > 0;) {
        const Vec& v = reflectors[jj];
        for (std::size_t k = 0; k < n; ++k) {
            auto qk = q.col(k);
            double s = 0.0;
            for (std::size_t i = jj; i < m; ++i) s += v[i - jj] * qk[i];
            for (std::size_t i = jj; i < m; ++i) qk[i] -= 2.0 * s * v[i - jj];
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) {
            for (std::size_t k = j; k < n; ++k) r(j, k) = -r(j, k);
            scale(-1.0, q.col(j));
        }
    }
    return {std::move(q), std::move(r)};
}

namespace {

// Householder reduction to tridiagonal form (v holds the input on entry and
// the accumulated transformation on exit; row index first).
void tridiagonalize(std::size_t n, DenseMatrix& v, Vec& d, Vec& e) {
    for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);
    for (std::size_t i = n - 1; i > 0; --i) {
        double scale_sum = 0.0;
        double h = 0.0;
        for (std::size_t k = 0; k < i; ++k) scale_sum += std::abs(d[k]);
        if (scale_sum == 0.0) {
            e[i] = d[i - 1];
            for (std::size_t j = 0; j < i; ++j) {
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
                v(j, i) = 0.0;
            }
        } else {
            for (std::size_t k = 0; k < i; ++k) {
                d[k] /= scale_sum;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0) g = -g;
            e[i] = scale_sum * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                v(j, i) = f;
                g = e[j] + v(j, j) * f;
                for (std::size_t k = j + 1; k <= i - 1; ++k) {
                    g += v(k, j) * d[k];
                    e[k] += v(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (std::size_t k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
            }
        }
        d[i] = h;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        v(n - 1, i) = v(i, i);
        v(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
            for (std::size_t j = 0; j <= i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
                for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
            }
        }
        for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = v(n - 1, j);
        v(n - 1, j) = 0.0;
    }
    v(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

// Implicit QL iterations on the tridiagonal (d, e), accumulating into v.
void tridiagonal_ql(std::size_t n, DenseMatrix& v, Vec& d, Vec& e) {
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    double f = 0.0;
    double tst1 = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        std::size_t m = l;
        while (m < n) {
            if (std::abs(e[m]) <= eps * tst1) break;
            ++m;
        }
        if (m > l) {
            int iter = 0;
            do {
                if (++iter > 200) throw SolverError("dense_eigh: QL iteration did not converge");
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
                f += h;
                p = d[m];
                double c = 1.0, c2 = 1.0, c3 = 1.0;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (std::size_t ii = m; ii-- > l;) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[ii];
                    h = c * p;
                    r = std::hypot(p, e[ii]);
                    e[ii + 1] = s * r;
                    s = e[ii] / r;
                    c = p / r;
                    p = c * d[ii] - s * g;
                    d[ii + 1] = h + s * (c * g + s * d[ii]);
                    for (std::size_t k = 0; k < n; ++k) {
                        h = v(k, ii + 1);
                        v(k, ii + 1) = s * v(k, ii) + c * h;
                        v(k, ii) = c * v(k, ii) - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

}  // namespace

EigenDecomposition dense_eigh(const DenseMatrix& t) {
    const std::size_t n = t.rows();
    if (t.cols() != n) throw InvalidArgument("dense_eigh: matrix is not square");
    if (n == 0) return {};
    if (asymmetry(t) > 1e-10) throw InvalidArgument("dense_eigh: input is not symmetric");

    DenseMatrix v(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) v(i, j) = 0.5 * (t(i, j) + t(j, i));
    Vec d(n), e(n);
    if (n == 1) {
        return {{v(0, 0)}, DenseMatrix::identity(1)};
    }
    tridiagonalize(n, v, d, e);
    tridiagonal_ql(n, v, d, e);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
    EigenDecomposition out{Vec(n), DenseMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = d[order[k]];
        auto src = v.col(order[k]);
        auto dst = out.vectors.col(k);
        std::copy(src.begin(), src.end(), dst.begin());
        // Deterministic sign: largest-magnitude entry positive.
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(dst[i]) > std::abs(dst[imax]) + 1e-14) imax = i;
        if (dst[imax] < 0.0) scale(-1.0, dst);
    }
    return out;
}

SvdFactors dense_svd(const DenseMatrix& a_in) {
    const bool transposed = a_in.rows() < a_in.cols();
    DenseMatrix u = transposed ? a_in.transpose() : a_in;
    const std::size_t m = u.rows();
    const std::size_t n = u.cols();
    DenseMatrix v = DenseMatrix::identity(n);
    const double eps = std::numeric_limits<double>::epsilon();

    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                auto ui = u.col(i);
                auto uj = u.col(j);
                const double alpha = dot(ui, ui);
                const double beta = dot(uj, uj);
                const double gamma = dot(ui, uj);
                if (std::abs(gamma) <= eps * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < m; ++k) {
                    const double x = ui[k], y = uj[k];
                    ui[k] = c * x - s * y;
                    uj[k] = s * x + c * y;
                }
                auto vi = v.col(i);
                auto vj = v.col(j);
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = vi[k], y = vj[k];
                    vi[k] = c * x - s * y;
                    vj[k] = s * x + c * y;
                }
            }
        }
        if (!rotated) break;
    }

    Vec sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(u.col(j));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    SvdFactors out{DenseMatrix(m, n), Vec(n), DenseMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.sigma[k] = sigma[j];
        auto dst = out.u.col(k);
        auto src = u.col(j);
        for (std::size_t i = 0; i < m; ++i) dst[i] = sigma[j] > 0.0 ? src[i] / sigma[j] : 0.0;
        out.v.set_column(k, v.col(j));
    }
    if (transposed) std::swap(out.u, out.v);
    return out;
}

DenseMatrix pseudo_inverse(const DenseMatrix& a, double cutoff, std::size_t* rank) {
    const SvdFactors svd = dense_svd(a);
    const double smax = svd.sigma.empty() ? 0.0 : svd.sigma.front();
    DenseMatrix pinv(a.cols(), a.rows());
    std::size_t kept = 0;
    for (std::size_t k = 0; k < svd.sigma.size(); ++k) {
        if (!(svd.sigma[k] > cutoff * smax)) continue;
        ++kept;
        const double inv = 1.0 / svd.sigma[k];
        for (std::size_t j = 0; j < a.rows(); ++j) {
            const double ujk = svd.u(j, k) * inv;
            if (ujk == 0.0) continue;
            for (std::size_t i = 0; i < a.cols(); ++i) pinv(i, j) += svd.v(i, k) * ujk;
        }
    }
    if (rank != nullptr) *rank = kept;
    return pinv;
}

SymmetricLsResult symmetric_ls_solve(const DenseMatrix& g, const DenseMatrix& f) {
    if (g.rows() != g.cols() || f.rows() != g.rows() || f.cols() != g.cols())
        throw InvalidArgument("symmetric_ls_solve: G and F must be square of equal size");
    SymmetricLsResult out;
    const DenseMatrix x0 = f * pseudo_inverse(g, 1e-12, &out.rank);
    out.x = 0.5 * (x0 + x0.transpose());
    out.rank_deficient = out.rank < g.rows();
    return out;
}

void forward_substitute(const DenseMatrix& l, std::span<double> b) {
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
        b[i] = s / l(i, i);
    }
}

void backward_substitute_transpose(const DenseMatrix& l, std::span<double> b) {
    const std::size_t n = l.rows();
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
        b[i] = s / l(i, i);
    }
}

void backward_substitute(const DenseMatrix& u, std::span<double> b) {
    const std::size_t n = u.rows();
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= u(i, k) * b[k];
        b[i] = s / u(i, i);
    }
}

DenseMatrix upper_triangular_inverse(const DenseMatrix& u) {
    const std::size_t n = u.rows();
    DenseMatrix inv = DenseMatrix::identity(n);
    for (std::size_t j = 0; j < n; ++j) backward_substitute(u, inv.col(j));
    return inv;
}

DenseMatrix lu_solve(const DenseMatrix& a_in, const DenseMatrix& b_in) {
    const std::size_t n = a_in.rows();
    if (a_in.cols() != n || b_in.rows() != n) throw InvalidArgument("lu_solve: dimension mismatch");
    DenseMatrix a = a_in;
    DenseMatrix b = b_in;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        if (a(p, k) == 0.0) throw SolverError("lu_solve: singular matrix");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(p, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            a(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
        }
    }
    for (std::size_t j = 0; j < b.cols(); ++j) backward_substitute(a, b.col(j));
    return b;
}

}  // namespace pdeinv
