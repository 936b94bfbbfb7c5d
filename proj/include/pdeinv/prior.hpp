#pragma once

// Gaussian prior N(m_pr, A^{-2}) with A = -gamma div(Theta grad) + delta I and a
// Robin condition beta * m on the boundary. Discretely R = K M^{-1} K.

#include <cstdint>
#include <memory>
#include <utility>

#include "pdeinv/fem/assembly.hpp"
#include "pdeinv/fem/space.hpp"
#include "pdeinv/linalg/krylov.hpp"
#include "pdeinv/linalg/linear_op.hpp"
#include "pdeinv/randeig.hpp"

namespace pdeinv {

struct PriorParams {
    double gamma = 1.0;
    double delta = 1.0;
    Tensor2 theta{};
    /// Robin coefficient; negative means sqrt(gamma * delta) / robin_constant.
    double beta = -1.0;
    double robin_constant = 1.42;
};

struct RandomizedVariance {
    Vec variance;
    GhepResult eig;
};

class BiLaplacianPrior {
public:
    BiLaplacianPrior(std::shared_ptr<const FnSpace> space, const PriorParams& params, Vec mean = {});

    [[nodiscard]] const FnSpace& space() const noexcept { return *space_; }
    [[nodiscard]] std::shared_ptr<const FnSpace> space_ptr() const noexcept { return space_; }
    [[nodiscard]] std::size_t size() const noexcept { return space_->size(); }
    [[nodiscard]] const PriorParams& params() const noexcept { return params_; }
    [[nodiscard]] double beta() const noexcept { return form_.beta; }
    [[nodiscard]] const Vec& mean() const noexcept { return mean_; }
    void set_mean(Vec mean);

    [[nodiscard]] const CsrMatrix& stiffness() const { return *k_; }  // K
    [[nodiscard]] const CsrMatrix& mass() const { return *m_; }       // M
    [[nodiscard]] const CsrMatrix& mass_factor() const { return c_m_; }

    void apply_precision(std::span<const double> x, std::span<double> y) const;   // R
    /// R^{-1} = K^{-1} M K^{-1}; `tight` selects the sampling tolerance for K solves.
    void apply_covariance(std::span<const double> x, std::span<double> y, bool tight = false) const;
    [[nodiscard]] LinearOp precision_op() const;
    [[nodiscard]] LinearOp covariance_op(bool tight = false) const;
    [[nodiscard]] LinearOp mass_op() const;
    [[nodiscard]] LinearOp mass_inverse_op() const;
    /// K^{-1} at the tight sampling tolerance.
    [[nodiscard]] Vec solve_k(std::span<const double> b) const;

    /// (1/2 (m - m_pr)^T R (m - m_pr), R (m - m_pr))
    [[nodiscard]] std::pair<double, Vec> cost_grad(std::span<const double> m) const;
    [[nodiscard]] double cost(std::span<const double> m) const { return cost_grad(m).first; }

    /// m_pr + x with K x = C_M eta, eta ~ N(0, I).
    [[nodiscard]] Vec sample(std::uint64_t seed) const;
    /// Zero-mean part of sample(seed).
    [[nodiscard]] Vec sample_deviation(std::uint64_t seed) const;

    /// Diagonal of R^{-1} from s Rademacher probes.
    [[nodiscard]] Vec variance_stochastic(std::size_t probes, std::uint64_t seed) const;
    /// Diagonal of R^{-1} from a rank-rbar double-pass eigendecomposition
    /// (B = I, no oversampling): 2 rbar covariance applies.
    [[nodiscard]] RandomizedVariance variance_randomized(std::size_t rbar, std::uint64_t seed,
                                                         unsigned threads = 1) const;

private:
    std::shared_ptr<const FnSpace> space_;
    PriorParams params_;
    EllipticForm form_;
    Vec mean_;
    std::shared_ptr<const CsrMatrix> k_, m_;
    CsrMatrix c_m_;
    SpdSolver k_solver_, k_solver_tight_, m_solver_;
};

/// Diagonal estimate [sum_j z_j .* A z_j] / s with Rademacher probes z_j.
Vec stochastic_diagonal(const LinearOp& a, std::size_t probes, std::uint64_t seed);
/// Diagonal of the rank-r double-pass approximation of a symmetric A (B = I, l = 0).
RandomizedVariance randomized_diagonal(const LinearOp& a, std::size_t r, std::uint64_t seed, unsigned threads = 1);

/// sum_i mu_i v_i .* v_i over the columns of V (partial sums of the spectral
/// variance estimate); column j of the result uses the first j + 1 modes.
DenseMatrix variance_partial_sums(const GhepResult& eig);

}  // namespace pdeinv
