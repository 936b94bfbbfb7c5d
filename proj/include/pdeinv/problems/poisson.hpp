#pragma once

// Coefficient field inversion: -div(e^m grad u) = f in the unit square,
// u = u_bottom / u_top on the bottom / top edges, e^m grad u . n = h on the
// left and right edges, with pointwise observations of u.

#include <functional>
#include <memory>
#include <vector>

#include "pdeinv/fem/mesh.hpp"
#include "pdeinv/fem/space.hpp"
#include "pdeinv/linalg/sparse.hpp"
#include "pdeinv/model.hpp"

namespace pdeinv {

using ScalarFn = std::function<double(double, double)>;

struct PoissonConfig {
    int state_degree = 2;
    int param_degree = 1;
    ScalarFn source;      // f, zero when empty
    ScalarFn flux_left;   // h on x = 0, zero when empty
    ScalarFn flux_right;  // h on x = 1, zero when empty
    double u_bottom = 0.0;
    double u_top = 1.0;
    double sigma = 0.01;
    double solver_rtol = 1e-12;
};

/// ln(2 + 2 exp(-50 ((x - 0.5)^2 + (y - 0.3)^2)))
double poisson_true_parameter(double x, double y);

class PoissonModel final : public InverseModel {
public:
    PoissonModel(std::shared_ptr<const Mesh> mesh, PoissonConfig cfg, std::vector<Point> obs_points, Vec data = {});

    const FnSpace& parameter_space() const override { return *param_; }
    [[nodiscard]] const FnSpace& state_space() const { return *state_; }
    [[nodiscard]] std::shared_ptr<const FnSpace> parameter_space_ptr() const { return param_; }
    [[nodiscard]] const CsrMatrix& observation_matrix() const { return b_; }
    [[nodiscard]] const std::vector<Point>& observation_points() const { return points_; }
    [[nodiscard]] const PoissonConfig& config() const { return cfg_; }

    State solve_forward(std::span<const double> m) const override;
    Vec observe(const State& u) const override;
    State solve_adjoint(const State& u, std::span<const double> m) const override;
    Vec misfit_gradient(const State& u, const State& p, std::span<const double> m) const override;
    State incremental_forward(const State& u, std::span<const double> m, std::span<const double> mhat) const override;
    State incremental_adjoint(const State& u, const State& p, std::span<const double> m, std::span<const double> mhat,
                              const State& uhat, bool gauss_newton) const override;
    Vec hessian_terms(const State& u, const State& p, const State& uhat, const State& phat, std::span<const double> m,
                      std::span<const double> mhat, bool gauss_newton) const override;

    const Vec& data() const override { return data_; }
    void set_data(Vec d) override;
    double noise_variance() const override { return cfg_.sigma * cfg_.sigma; }

    /// <c grad a, grad phi_j> for a coefficient c given at the state quadrature points.
    [[nodiscard]] Vec weighted_action(std::span<const double> cq, std::span<const double> a) const;
    /// Parameter-space vector with entries sum_q w_q c_q psi_i grad a . grad b.
    [[nodiscard]] Vec pairing(std::span<const double> cq, std::span<const double> a, std::span<const double> b) const;
    /// Parameter field evaluated at the state quadrature points.
    [[nodiscard]] Vec at_quadrature(std::span<const double> m) const;

private:
    struct Cache;
    std::shared_ptr<const Cache> cache_for(const State& s, std::span<const double> m) const;
    std::shared_ptr<const Cache> build_cache(std::span<const double> m) const;
    Vec solve_homogeneous(const Cache& c, Vec rhs) const;

    std::shared_ptr<const Mesh> mesh_;
    PoissonConfig cfg_;
    std::shared_ptr<const FnSpace> state_, param_;
    std::vector<Point> points_;
    CsrMatrix b_;
    Vec data_;
    Vec load_;  // f and Neumann contributions
    std::vector<std::size_t> dirichlet_dofs_;
    Vec dirichlet_values_;

    // Per (triangle, quadrature point): weight, state basis gradients, parameter basis values.
    std::size_t nq_ = 0;
    std::vector<double> qw_;
    std::vector<Point> qgrad_;
    std::vector<double> qpsi_;
};

}  // namespace pdeinv
