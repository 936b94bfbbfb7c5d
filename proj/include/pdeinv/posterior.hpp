#pragma once

// Laplace approximation at the MAP point from a low-rank generalized
// eigendecomposition H_misfit V = R V Lambda, V^T R V = I.

#include <string>
#include <vector>

#include "pdeinv/model.hpp"
#include "pdeinv/randeig.hpp"

namespace pdeinv {

enum class GhepSolver { single_pass, double_pass };
std::string_view to_string(GhepSolver s);
GhepSolver parse_ghep_solver(std::string_view text);

struct PosteriorConfig {
    GhepConfig ghep;
    GhepSolver solver = GhepSolver::double_pass;
    double lambda_cut = 0.07;
    bool gauss_newton = true;
    bool check_eigenpairs = true;  // residuals of the top half after the build
};

class LaplacePosterior {
public:
    /// Runs the eigensolver on (H_misfit(m_map), R).
    LaplacePosterior(const InverseModel& model, const BiLaplacianPrior& prior, Vec m_map,
                     const PosteriorConfig& cfg = {});
    /// From given R-orthonormal eigenpairs (descending).
    LaplacePosterior(const BiLaplacianPrior& prior, Vec m_map, Vec lambda, DenseMatrix v, double lambda_cut = 0.07);

    [[nodiscard]] const Vec& m_map() const { return m_map_; }
    [[nodiscard]] const BiLaplacianPrior& prior() const { return *prior_; }
    /// All computed eigenvalues, before clipping.
    [[nodiscard]] const Vec& spectrum() const { return spectrum_; }
    [[nodiscard]] std::size_t rank() const { return lambda_.size(); }
    [[nodiscard]] const Vec& lambda() const { return lambda_; }
    [[nodiscard]] const DenseMatrix& v() const { return v_; }
    [[nodiscard]] const Vec& d() const { return d_; }  // lambda / (1 + lambda)
    [[nodiscard]] const Vec& s() const { return s_; }  // 1 - 1 / sqrt(1 + lambda)
    [[nodiscard]] const GhepResult& ghep() const { return ghep_; }
    [[nodiscard]] double eigen_residual() const { return eigen_residual_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

    /// R^-1 w - V D V^T w
    [[nodiscard]] Vec apply_hinv(std::span<const double> w) const;
    /// (I - V S V^T R) x
    [[nodiscard]] Vec apply_sample_factor(std::span<const double> x) const;
    /// m_map + (I - V S V^T R) x with x a zero-mean prior sample drawn from seed.
    [[nodiscard]] Vec sample(std::uint64_t seed) const;
    /// sum_i d_i v_i^2 (non-negative)
    [[nodiscard]] Vec variance_correction() const;
    [[nodiscard]] Vec variance(std::span<const double> prior_variance) const;

private:
    void keep(Vec lambda, DenseMatrix v, double lambda_cut);

    const BiLaplacianPrior* prior_;
    Vec m_map_;
    Vec spectrum_, lambda_, d_, s_;
    DenseMatrix v_;
    GhepResult ghep_;
    double eigen_residual_ = 0;
    std::vector<std::string> warnings_;
};

}  // namespace pdeinv
