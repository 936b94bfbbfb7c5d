#pragma once

// Initial-condition inversion for u_t - kappa lap u + v . grad u = 0 with
// homogeneous Neumann conditions, implicit Euler in time and pointwise
// observations at a set of time nodes. The parameter-to-observable map is
// linear; the adjoint is the exact transpose of the discrete forward map.

#include <filesystem>
#include <memory>
#include <vector>

#include "pdeinv/fem/mesh.hpp"
#include "pdeinv/fem/space.hpp"
#include "pdeinv/linalg/krylov.hpp"
#include "pdeinv/linalg/sparse.hpp"
#include "pdeinv/model.hpp"

namespace pdeinv {

struct AdvDiffConfig {
    int state_degree = 1;  // the parameter is always P1
    double kappa = 1e-3;
    double t_final = 4.0;
    std::size_t steps = 40;
    double obs_start = 1.0;     // observations at obs_start + i * obs_interval, i >= 1, up to t_final
    double obs_interval = 0.2;
    double obs_end = -1;        // last observation time; negative means t_final
    double sigma2 = 2.45e-7;
    bool gls = true;
};

/// min(0.5, exp(-100 ((x - 0.35)^2 + (y - 0.7)^2)))
double advdiff_true_parameter(double x, double y);

/// Elementwise velocity: the curl of the P1 interpolant of
/// psi = sin^2(pi x) sin^2(pi y) / pi * prod_holes (1 - exp(-d^2 / ell^2)),
/// d the distance to a hole, scaled to unit maximum speed. psi_h vanishes on
/// every boundary, so the field is discretely divergence free with zero flux.
std::vector<Point> default_velocity(const Mesh& mesh, double ell = 0.1);

/// Velocity file: `x y vx vy` per triangle, at the barycenters.
void write_velocity(const std::filesystem::path& path, const Mesh& mesh, std::span<const Point> v);
std::vector<Point> read_velocity(const std::filesystem::path& path, const Mesh& mesh);

/// Time nodes k with k dt = obs_start + i obs_interval (i = 1, 2, ...) and k dt <= obs_end.
std::vector<std::size_t> observation_nodes(const AdvDiffConfig& cfg);

class AdvDiffModel final : public InverseModel {
public:
    AdvDiffModel(std::shared_ptr<const Mesh> mesh, AdvDiffConfig cfg, std::vector<Point> velocity,
                 std::vector<Point> obs_points, Vec data = {});

    const FnSpace& parameter_space() const override { return *param_; }
    [[nodiscard]] std::shared_ptr<const FnSpace> parameter_space_ptr() const { return param_; }
    [[nodiscard]] const FnSpace& state_space() const { return *state_; }
    [[nodiscard]] const AdvDiffConfig& config() const { return cfg_; }
    [[nodiscard]] const std::vector<std::size_t>& obs_nodes() const { return obs_nodes_; }
    [[nodiscard]] const std::vector<Point>& observation_points() const { return points_; }
    [[nodiscard]] const std::vector<Point>& velocity() const { return velocity_; }
    [[nodiscard]] const CsrMatrix& state_mass() const { return *m_; }
    [[nodiscard]] double dt() const { return cfg_.t_final / static_cast<double>(cfg_.steps); }

    /// Trajectory u^0 .. u^N (N = steps).
    State solve_forward(std::span<const double> m) const override;
    /// Observations ordered by time node, then point.
    Vec observe(const State& u) const override;
    /// Dual adjoint trajectory lambda^N .. lambda^0 (stored by time node);
    /// the misfit gradient is P^T lambda^0.
    State solve_adjoint(const State& u, std::span<const double> m) const override;
    Vec misfit_gradient(const State& u, const State& p, std::span<const double> m) const override;
    State incremental_forward(const State& u, std::span<const double> m, std::span<const double> mhat) const override;
    State incremental_adjoint(const State& u, const State& p, std::span<const double> m, std::span<const double> mhat,
                              const State& uhat, bool gauss_newton) const override;
    Vec hessian_terms(const State& u, const State& p, const State& uhat, const State& phat, std::span<const double> m,
                      std::span<const double> mhat, bool gauss_newton) const override;

    const Vec& data() const override { return data_; }
    void set_data(Vec d) override;
    double noise_variance() const override { return cfg_.sigma2; }

    /// Adjoint map of the observation operator: F^T w (Euclidean).
    [[nodiscard]] Vec apply_adjoint_map(std::span<const double> w) const;
    /// Adjoint field p(., 0) = -M^{-1} P^T lambda^0 in the parameter space, so
    /// that the misfit gradient equals -M p(., 0).
    [[nodiscard]] Vec initial_adjoint(const State& p) const;

private:
    State backward(std::span<const double> residual) const;  // injected sigma^-2-scaled residuals

    std::shared_ptr<const Mesh> mesh_;
    AdvDiffConfig cfg_;
    std::shared_ptr<const FnSpace> state_, param_;
    std::vector<Point> velocity_;
    std::vector<Point> points_;
    std::vector<std::size_t> obs_nodes_;
    CsrMatrix b_;
    CsrMatrix interp_;  // param -> state (identity when both are P1)
    std::shared_ptr<const CsrMatrix> m_;
    std::shared_ptr<const CsrMatrix> m_param_;
    BandedLu step_;
    SpdSolver param_mass_solver_;
    Vec data_;
};

/// MAP point of a linear model by CG on (H_misfit + R) m = -g(0), preconditioned
/// by R^{-1}; stops when ||g|| <= rtol ||g_0||.
struct LinearMapResult {
    Vec m;
    std::size_t iterations = 0;
    bool converged = false;
    double gradient_norm = 0;
    double initial_gradient_norm = 0;
};
LinearMapResult solve_map_cg(const InverseModel& model, const BiLaplacianPrior& prior, double rtol = 1e-6,
                             std::size_t max_iter = 500);

}  // namespace pdeinv
