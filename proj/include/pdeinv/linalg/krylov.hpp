#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>

#include "pdeinv/linalg/linear_op.hpp"
#include "pdeinv/linalg/sparse.hpp"
#include "pdeinv/linalg/vector.hpp"

namespace pdeinv {

enum class CgTermination { converged, max_iter, negative_curvature };

std::string_view to_string(CgTermination reason);

struct CgOptions {
    double rtol = 1e-10;
    double atol = 0.0;
    std::size_t max_iter = 2000;
    /// Steihaug mode: stop as soon as a search direction has p^T A p <= 0.
    bool monitor_curvature = false;
};

struct CgResult {
    Vec x;
    std::size_t iterations = 0;
    CgTermination reason = CgTermination::converged;
    double residual_norm = 0.0;  // ||rhs - A x|| from the recurrence
    double rhs_norm = 0.0;
};

/// Preconditioned conjugate gradients for a symmetric positive (definite on
/// the Krylov space) operator. Stops when ||r|| <= max(rtol ||rhs||, atol).
/// With curvature monitoring, a non-positive curvature direction ends the
/// solve with the current iterate (x = 0 if it happens on the first step).
CgResult cg_solve(const LinearOp& op, std::span<const double> rhs, const LinearOp* precond,
                  const CgOptions& options);

/// Point-Jacobi preconditioner diag(A)^{-1}.
LinearOp jacobi_preconditioner(const CsrMatrix& a);

/// Symmetric Gauss-Seidel preconditioner: M = (D+L) D^{-1} (D+U), inverted by
/// a forward and a backward sweep. SPD whenever A is.
LinearOp symmetric_gauss_seidel(std::shared_ptr<const CsrMatrix> a);

/// Sparse SPD solve by SGS-preconditioned CG bundled as a reusable operator.
/// Throws SolverError when the solve does not reach the tolerance.
class SpdSolver {
public:
    SpdSolver() = default;
    SpdSolver(std::shared_ptr<const CsrMatrix> a, double rtol, std::size_t max_iter = 5000);

    [[nodiscard]] std::size_t size() const noexcept { return a_ ? a_->rows() : 0; }
    [[nodiscard]] const CsrMatrix& matrix() const { return *a_; }
    [[nodiscard]] std::shared_ptr<const CsrMatrix> matrix_ptr() const { return a_; }

    void solve(std::span<const double> b, std::span<double> x) const;
    [[nodiscard]] Vec solve(std::span<const double> b) const;
    /// Inverse action as a symmetric linear operator.
    [[nodiscard]] LinearOp inverse_op() const;

private:
    std::shared_ptr<const CsrMatrix> a_;
    LinearOp op_;
    LinearOp precond_;
    CgOptions options_;
};

/// Banded LU with partial pivoting of a general sparse square matrix after a
/// reverse Cuthill-McKee reordering. Factor once, solve with A or A^T many times.
class BandedLu {
public:
    BandedLu() = default;
    explicit BandedLu(const CsrMatrix& a);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t lower_bandwidth() const noexcept { return kl_; }
    [[nodiscard]] std::size_t upper_bandwidth() const noexcept { return ku_; }

    void solve(std::span<const double> b, std::span<double> x) const;
    void solve_transpose(std::span<const double> b, std::span<double> x) const;
    [[nodiscard]] Vec solve(std::span<const double> b) const;
    [[nodiscard]] Vec solve_transpose(std::span<const double> b) const;

private:
    double& band(std::size_t i, std::size_t j) { return lu_[i * width_ + (j + kl_ - i)]; }
    [[nodiscard]] double band(std::size_t i, std::size_t j) const { return lu_[i * width_ + (j + kl_ - i)]; }

    std::size_t n_ = 0;
    std::size_t kl_ = 0;
    std::size_t ku_ = 0;     // original upper bandwidth
    std::size_t width_ = 0;  // kl + (ku + kl) + 1
    std::vector<double> lu_;
    std::vector<std::size_t> pivots_;
    std::vector<std::size_t> perm_;  // new index -> old index
};

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns perm with perm[new] = old.
std::vector<std::size_t> reverse_cuthill_mckee(const CsrMatrix& a);

}  // namespace pdeinv
