#include "pdeinv/linalg/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "pdeinv/error.hpp"

namespace pdeinv {

std::string_view to_string(CgTermination reason) {
    switch (reason) {
        case CgTermination::converged: return "converged";
        case CgTermination::max_iter: return "max_iter";
        case CgTermination::negative_curvature: return "negative_curvature";
    }
    return "unknown";
}

CgResult cg_solve(const LinearOp& op, std::span<const double> rhs, const LinearOp* precond,
                  const CgOptions& options) {
    const std::size_t n = op.size();
    if (rhs.size() != n) throw InvalidArgument("cg_solve: rhs size does not match operator");
    if (!all_finite(rhs)) throw InvalidArgument("cg_solve: rhs contains non-finite values");

    CgResult res;
    res.x.assign(n, 0.0);
    res.rhs_norm = norm2(rhs);
    res.residual_norm = res.rhs_norm;
    if (res.rhs_norm == 0.0) return res;

    const double target = std::max(options.rtol * res.rhs_norm, options.atol);
    Vec r(rhs.begin(), rhs.end());
    Vec z(n), p(n), ap(n);
    auto precondition = [&](const Vec& in, Vec& out) {
        if (precond) precond->apply(in, out);
        else out = in;
    };
    precondition(r, z);
    p = z;
    double rz = dot(r, z);

    for (std::size_t it = 0; it < options.max_iter; ++it) {
        op.apply(p, ap);
        const double pap = dot(p, ap);
        if (!std::isfinite(pap)) throw SolverError("cg_solve: non-finite curvature");
        if (pap <= 0.0) {
            if (options.monitor_curvature) {
                res.reason = CgTermination::negative_curvature;
                return res;
            }
            throw SolverError("cg_solve: operator is not positive definite (p^T A p = " +
                              std::to_string(pap) + ")");
        }
        const double alpha = rz / pap;
        axpy(alpha, p, res.x);
        axpy(-alpha, ap, r);
        res.iterations = it + 1;
        res.residual_norm = norm2(r);
        if (res.residual_norm <= target) {
            res.reason = CgTermination::converged;
            return res;
        }
        precondition(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    res.reason = CgTermination::max_iter;
    return res;
}

LinearOp jacobi_preconditioner(const CsrMatrix& a) {
    Vec inv = a.diagonal();
    for (std::size_t i = 0; i < inv.size(); ++i) {
        if (!(inv[i] > 0.0)) throw NotPositiveDefinite(i, "jacobi_preconditioner: non-positive diagonal");
        inv[i] = 1.0 / inv[i];
    }
    const std::size_t n = inv.size();
    return {n,
            [inv = std::move(inv)](std::span<const double> x, std::span<double> y) {
                for (std::size_t i = 0; i < x.size(); ++i) y[i] = inv[i] * x[i];
            },
            true};
}

LinearOp symmetric_gauss_seidel(std::shared_ptr<const CsrMatrix> a) {
    Vec diag = a->diagonal();
    for (std::size_t i = 0; i < diag.size(); ++i)
        if (!(diag[i] > 0.0)) throw NotPositiveDefinite(i, "symmetric_gauss_seidel: non-positive diagonal");
    const std::size_t n = a->rows();
    // M = (D + L) D^{-1} (D + U); M^{-1} x via a forward then a backward sweep.
    return {n,
            [a = std::move(a), diag = std::move(diag)](std::span<const double> x, std::span<double> y) {
                const auto rp = a->row_ptr();
                const auto ci = a->col_idx();
                const auto v = a->values();
                const std::size_t n = diag.size();
                for (std::size_t i = 0; i < n; ++i) {
                    double s = x[i];
                    for (std::size_t k = rp[i]; k < rp[i + 1] && ci[k] < i; ++k) s -= v[k] * y[ci[k]];
                    y[i] = s / diag[i];
                }
                for (std::size_t i = 0; i < n; ++i) y[i] *= diag[i];
                for (std::size_t ii = n; ii-- > 0;) {
                    double s = y[ii];
                    for (std::size_t k = rp[ii + 1]; k-- > rp[ii] && ci[k] > ii;) s -= v[k] * y[ci[k]];
                    y[ii] = s / diag[ii];
                }
            },
            true};
}

SpdSolver::SpdSolver(std::shared_ptr<const CsrMatrix> a, double rtol, std::size_t max_iter)
    : a_(std::move(a)) {
    op_ = LinearOp::from_matrix(a_, true);
    precond_ = symmetric_gauss_seidel(a_);
    options_.rtol = rtol;
    options_.max_iter = max_iter;
}

void SpdSolver::solve(std::span<const double> b, std::span<double> x) const {
    CgResult res = cg_solve(op_, b, &precond_, options_);
    if (res.reason != CgTermination::converged)
        throw SolverError("SpdSolver: CG did not converge (" + std::string(to_string(res.reason)) +
                          ", residual " + std::to_string(res.residual_norm / res.rhs_norm) + ")");
    std::copy(res.x.begin(), res.x.end(), x.begin());
}

Vec SpdSolver::solve(std::span<const double> b) const {
    Vec x(size());
    solve(b, x);
    return x;
}

LinearOp SpdSolver::inverse_op() const {
    SpdSolver self = *this;
    return {size(), [self](std::span<const double> x, std::span<double> y) { self.solve(x, y); }, true};
}

std::vector<std::size_t> reverse_cuthill_mckee(const CsrMatrix& a) {
    const std::size_t n = a.rows();
    std::vector<std::vector<std::size_t>> adj(n);
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
            if (ci[k] != i) {
                adj[i].push_back(ci[k]);
                adj[ci[k]].push_back(i);
            }
    for (auto& nb : adj) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    std::vector<std::size_t> order;
    order.reserve(n);
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> by_degree(n);
    std::iota(by_degree.begin(), by_degree.end(), 0);
    std::stable_sort(by_degree.begin(), by_degree.end(),
                     [&](std::size_t x, std::size_t y) { return adj[x].size() < adj[y].size(); });
    for (std::size_t start : by_degree) {
        if (seen[start]) continue;
        std::deque<std::size_t> queue{start};
        seen[start] = true;
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            order.push_back(v);
            std::vector<std::size_t> next;
            for (std::size_t w : adj[v])
                if (!seen[w]) {
                    seen[w] = true;
                    next.push_back(w);
                }
            std::stable_sort(next.begin(), next.end(),
                             [&](std::size_t x, std::size_t y) { return adj[x].size() < adj[y].size(); });
            for (std::size_t w : next) queue.push_back(w);
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

BandedLu::BandedLu(const CsrMatrix& a) : n_(a.rows()) {
    if (a.rows() != a.cols()) throw InvalidArgument("BandedLu: matrix must be square");
    perm_ = reverse_cuthill_mckee(a);
    std::vector<std::size_t> inv(n_);
    for (std::size_t i = 0; i < n_; ++i) inv[perm_[i]] = i;

    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto val = a.values();
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
            const std::size_t ni = inv[i];
            const std::size_t nj = inv[ci[k]];
            if (ni > nj) kl_ = std::max(kl_, ni - nj);
            else ku_ = std::max(ku_, nj - ni);
        }
    width_ = 2 * kl_ + ku_ + 1;
    lu_.assign(n_ * width_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) band(inv[i], inv[ci[k]]) += val[k];

    // Gaussian elimination with row interchanges; U gets upper bandwidth kl + ku.
    pivots_.resize(n_);
    const std::size_t kuu = kl_ + ku_;
    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        const std::size_t last_col = std::min(n_ - 1, k + kuu);
        std::size_t p = k;
        double best = std::abs(band(k, k));
        for (std::size_t i = k + 1; i <= last_row; ++i)
            if (std::abs(band(i, k)) > best) {
                best = std::abs(band(i, k));
                p = i;
            }
        if (best == 0.0) throw SolverError("BandedLu: matrix is singular at step " + std::to_string(k));
        pivots_[k] = p;
        if (p != k)
            for (std::size_t j = k; j <= last_col; ++j) std::swap(band(k, j), band(p, j));
        const double piv = band(k, k);
        for (std::size_t i = k + 1; i <= last_row; ++i) {
            const double l = band(i, k) / piv;
            band(i, k) = l;
            if (l == 0.0) continue;
            for (std::size_t j = k + 1; j <= last_col; ++j) band(i, j) -= l * band(k, j);
        }
    }
}

void BandedLu::solve(std::span<const double> b, std::span<double> x) const {
    Vec y(n_);
    for (std::size_t i = 0; i < n_; ++i) y[i] = b[perm_[i]];
    for (std::size_t k = 0; k < n_; ++k) {
        std::swap(y[k], y[pivots_[k]]);
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        for (std::size_t i = k + 1; i <= last_row; ++i) y[i] -= band(i, k) * y[k];
    }
    const std::size_t kuu = kl_ + ku_;
    for (std::size_t k = n_; k-- > 0;) {
        const std::size_t last_col = std::min(n_ - 1, k + kuu);
        double s = y[k];
        for (std::size_t j = k + 1; j <= last_col; ++j) s -= band(k, j) * y[j];
        y[k] = s / band(k, k);
    }
    for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = y[i];
}

void BandedLu::solve_transpose(std::span<const double> b, std::span<double> x) const {
    Vec y(n_);
    for (std::size_t i = 0; i < n_; ++i) y[i] = b[perm_[i]];
    const std::size_t kuu = kl_ + ku_;
    // U^T z = y
    for (std::size_t k = 0; k < n_; ++k) {
        y[k] /= band(k, k);
        const std::size_t last_col = std::min(n_ - 1, k + kuu);
        for (std::size_t j = k + 1; j <= last_col; ++j) y[j] -= band(k, j) * y[k];
    }
    // Undo the elementary transformations in reverse order.
    for (std::size_t k = n_; k-- > 0;) {
        const std::size_t last_row = std::min(n_ - 1, k + kl_);
        double s = y[k];
        for (std::size_t i = k + 1; i <= last_row; ++i) s -= band(i, k) * y[i];
        y[k] = s;
        std::swap(y[k], y[pivots_[k]]);
    }
    for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = y[i];
}

Vec BandedLu::solve(std::span<const double> b) const {
    Vec x(n_);
    solve(b, x);
    return x;
}

Vec BandedLu::solve_transpose(std::span<const double> b) const {
    Vec x(n_);
    solve_transpose(b, x);
    return x;
}

}  // namespace pdeinv
