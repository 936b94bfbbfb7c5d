#pragma once

// Randomized solvers for the generalized symmetric eigenproblem A v = lambda B v
// with B symmetric positive definite. A is only accessed through its action.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

#include "pdeinv/linalg/dense.hpp"
#include "pdeinv/linalg/linear_op.hpp"

namespace pdeinv {

struct GhepConfig {
    std::size_t r = 10;       // requested modes
    std::size_t l = 10;       // oversampling
    std::uint64_t seed = 0;   // Gaussian test matrix seed
    unsigned threads = 1;     // concurrent A applies within one pass
};

struct GhepResult {
    Vec lambda;     // descending, length r
    DenseMatrix v;  // n x r, V^T B V = I
    std::size_t a_applies = 0;
    std::size_t b_applies = 0;
    std::size_t b_solves = 0;
    /// Sketch columns that were numerically dependent and replaced by random
    /// directions when building the basis (exactly low-rank operators).
    std::size_t replaced_columns = 0;
    bool rank_deficient_ls = false;
};

struct PreCholQrResult {
    DenseMatrix q;     // Q^T B Q = I
    DenseMatrix qbar;  // B Q
    DenseMatrix r;     // Q R = Y
};

/// B-orthonormalization of Y: [Z, R_Y] = qr(Y), R_Z = chol(Z^T B Z),
/// Q = Z R_Z^{-1}, Qbar = B Z R_Z^{-1}, R = R_Z R_Y. Costs cols(Y) B applies.
/// Throws RankDeficient when Y (or Z^T B Z) is numerically singular.
PreCholQrResult pre_chol_qr(const DenseMatrix& y, const LinearOp& b_apply);

/// Standard-normal test matrix (column j depends only on (seed, j)).
DenseMatrix sketch_matrix(std::size_t n, std::size_t cols, std::uint64_t seed);

/// Two passes over A: Y = B^{-1} A Omega, then T = Q^T A Q.
GhepResult double_pass(const LinearOp& a, const LinearOp& b_apply, const LinearOp& b_solve, const GhepConfig& cfg);
GhepResult double_pass(const LinearOp& a, const LinearOp& b_apply, const LinearOp& b_solve,
                       const DenseMatrix& omega, std::size_t r, unsigned threads = 1);

/// One pass over A: T solves min || T (Qbar^T Omega) - Qbar^T Y || and is symmetrized.
GhepResult single_pass(const LinearOp& a, const LinearOp& b_apply, const LinearOp& b_solve, const GhepConfig& cfg);
GhepResult single_pass(const LinearOp& a, const LinearOp& b_apply, const LinearOp& b_solve,
                       const DenseMatrix& omega, std::size_t r, unsigned threads = 1);

/// One pass over A with the reference reduction
/// T = (Qbar^T Omega)^{-T} (Omega^T A Omega) (Qbar^T Omega)^{-1}.
GhepResult single_pass_saibaba(const LinearOp& a, const LinearOp& b_apply, const LinearOp& b_solve,
                               const GhepConfig& cfg);
GhepResult single_pass_saibaba(const LinearOp& a, const LinearOp& b_apply, const LinearOp& b_solve,
                               const DenseMatrix& omega, std::size_t r, unsigned threads = 1);

/// CSV with header `index,lambda`, one row per eigenvalue (1-based index).
void write_eigenvalues_csv(const std::filesystem::path& path, std::span<const double> lambda);

}  // namespace pdeinv
