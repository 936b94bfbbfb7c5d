#include "pdeinv/problems/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdeinv/error.hpp"
#include "pdeinv/fem/assembly.hpp"
#include "pdeinv/linalg/krylov.hpp"

namespace pdeinv {

double poisson_true_parameter(double x, double y) {
    return std::log(2.0 + 2.0 * std::exp(-50.0 * ((x - 0.5) * (x - 0.5) + (y - 0.3) * (y - 0.3))));
}

struct PoissonModel::Cache : ModelCache {
    Vec emq;
    SpdSolver solver;
};

PoissonModel::PoissonModel(std::shared_ptr<const Mesh> mesh, PoissonConfig cfg, std::vector<Point> obs_points,
                           Vec data)
    : mesh_(std::move(mesh)), cfg_(std::move(cfg)), points_(std::move(obs_points)) {
    if (!(cfg_.sigma > 0)) throw InvalidArgument("poisson: sigma must be positive");
    if (cfg_.param_degree > cfg_.state_degree)
        throw InvalidArgument("poisson: parameter degree may not exceed the state degree");
    state_ = std::make_shared<const FnSpace>(mesh_, cfg_.state_degree);
    param_ = std::make_shared<const FnSpace>(mesh_, cfg_.param_degree);
    b_ = point_observation(*state_, points_);
    set_data(data.empty() ? Vec(points_.size(), 0.0) : std::move(data));

    load_.assign(state_->size(), 0.0);
    if (cfg_.source) load_ = assemble_load(*state_, cfg_.source);
    if (cfg_.flux_left) axpy(1.0, assemble_boundary_load(*state_, BoundaryTag::left, cfg_.flux_left), load_);
    if (cfg_.flux_right) axpy(1.0, assemble_boundary_load(*state_, BoundaryTag::right, cfg_.flux_right), load_);

    const auto bottom = state_->boundary_dofs(BoundaryTag::bottom);
    const auto top = state_->boundary_dofs(BoundaryTag::top);
    for (auto d : bottom) {
        dirichlet_dofs_.push_back(d);
        dirichlet_values_.push_back(cfg_.u_bottom);
    }
    for (auto d : top) {
        if (std::find(bottom.begin(), bottom.end(), d) != bottom.end()) continue;
        dirichlet_dofs_.push_back(d);
        dirichlet_values_.push_back(cfg_.u_top);
    }

    const QuadratureRule& rule = triangle_rule(cfg_.state_degree);
    nq_ = rule.size();
    const std::size_t nt = mesh_->num_triangles(), ks = state_->dofs_per_element(),
                      kp = param_->dofs_per_element();
    qw_.resize(nt * nq_);
    qgrad_.resize(nt * nq_ * ks);
    qpsi_.resize(nt * nq_ * kp);
    std::array<Point, 6> g{};
    std::array<double, 6> psi{};
    for (std::size_t t = 0; t < nt; ++t) {
        const double area = mesh_->area(t);
        for (std::size_t q = 0; q < nq_; ++q) {
            const std::size_t tq = t * nq_ + q;
            qw_[tq] = rule.weights[q] * area;
            state_->basis_gradients(t, rule.bary[q], g);
            std::copy_n(g.begin(), ks, qgrad_.begin() + static_cast<std::ptrdiff_t>(tq * ks));
            param_->basis(rule.bary[q], psi);
            std::copy_n(psi.begin(), kp, qpsi_.begin() + static_cast<std::ptrdiff_t>(tq * kp));
        }
    }
}

void PoissonModel::set_data(Vec d) {
    if (d.size() != points_.size())
        throw InvalidArgument("poisson: data has " + std::to_string(d.size()) + " entries for " +
                              std::to_string(points_.size()) + " observation points");
    data_ = std::move(d);
}

Vec PoissonModel::at_quadrature(std::span<const double> m) const {
    if (m.size() != param_->size()) throw InvalidArgument("poisson: parameter has the wrong size");
    const std::size_t nt = mesh_->num_triangles(), kp = param_->dofs_per_element();
    Vec mq(nt * nq_, 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto dofs = param_->element_dofs(t);
        for (std::size_t q = 0; q < nq_; ++q) {
            const double* psi = &qpsi_[(t * nq_ + q) * kp];
            double v = 0;
            for (std::size_t i = 0; i < kp; ++i) v += psi[i] * m[dofs[i]];
            mq[t * nq_ + q] = v;
        }
    }
    return mq;
}

Vec PoissonModel::weighted_action(std::span<const double> cq, std::span<const double> a) const {
    const std::size_t nt = mesh_->num_triangles(), ks = state_->dofs_per_element();
    Vec r(state_->size(), 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto dofs = state_->element_dofs(t);
        for (std::size_t q = 0; q < nq_; ++q) {
            const std::size_t tq = t * nq_ + q;
            const Point* g = &qgrad_[tq * ks];
            Point ga{};
            for (std::size_t i = 0; i < ks; ++i) {
                ga.x += a[dofs[i]] * g[i].x;
                ga.y += a[dofs[i]] * g[i].y;
            }
            const double c = qw_[tq] * cq[tq];
            for (std::size_t j = 0; j < ks; ++j) r[dofs[j]] += c * (ga.x * g[j].x + ga.y * g[j].y);
        }
    }
    return r;
}

Vec PoissonModel::pairing(std::span<const double> cq, std::span<const double> a, std::span<const double> b) const {
    const std::size_t nt = mesh_->num_triangles(), ks = state_->dofs_per_element(),
                      kp = param_->dofs_per_element();
    Vec r(param_->size(), 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto sd = state_->element_dofs(t);
        const auto pd = param_->element_dofs(t);
        for (std::size_t q = 0; q < nq_; ++q) {
            const std::size_t tq = t * nq_ + q;
            const Point* g = &qgrad_[tq * ks];
            Point ga{}, gb{};
            for (std::size_t i = 0; i < ks; ++i) {
                ga.x += a[sd[i]] * g[i].x;
                ga.y += a[sd[i]] * g[i].y;
                gb.x += b[sd[i]] * g[i].x;
                gb.y += b[sd[i]] * g[i].y;
            }
            const double c = qw_[tq] * cq[tq] * (ga.x * gb.x + ga.y * gb.y);
            const double* psi = &qpsi_[tq * kp];
            for (std::size_t i = 0; i < kp; ++i) r[pd[i]] += c * psi[i];
        }
    }
    return r;
}

std::shared_ptr<const PoissonModel::Cache> PoissonModel::build_cache(std::span<const double> m) const {
    if (!all_finite(m)) throw InvalidArgument("poisson: parameter contains non-finite entries");
    auto c = std::make_shared<Cache>();
    c->emq = at_quadrature(m);
    for (auto& v : c->emq) v = std::exp(v);
    auto a = std::make_shared<CsrMatrix>(assemble_weighted_stiffness(*state_, c->emq));
    Vec dummy(state_->size(), 0.0);
    apply_dirichlet(*a, dummy, dirichlet_dofs_, Vec(dirichlet_dofs_.size(), 0.0));
    c->solver = SpdSolver(std::move(a), cfg_.solver_rtol, 20000);
    return c;
}

std::shared_ptr<const PoissonModel::Cache> PoissonModel::cache_for(const State& s, std::span<const double> m) const {
    if (auto c = std::dynamic_pointer_cast<const Cache>(s.cache)) return c;
    return build_cache(m);
}

Vec PoissonModel::solve_homogeneous(const Cache& c, Vec rhs) const {
    for (auto d : dirichlet_dofs_) rhs[d] = 0.0;
    return c.solver.solve(rhs);
}

State PoissonModel::solve_forward(std::span<const double> m) const {
    auto c = build_cache(m);
    // Lift: u = g on the Dirichlet dofs, A_0 w = load - A g elsewhere.
    Vec g(state_->size(), 0.0);
    for (std::size_t k = 0; k < dirichlet_dofs_.size(); ++k) g[dirichlet_dofs_[k]] = dirichlet_values_[k];
    Vec rhs = load_;
    axpy(-1.0, weighted_action(c->emq, g), rhs);
    Vec u = solve_homogeneous(*c, std::move(rhs));
    for (std::size_t k = 0; k < dirichlet_dofs_.size(); ++k) u[dirichlet_dofs_[k]] = dirichlet_values_[k];
    ++counters_->forward;
    return {{std::move(u)}, c};
}

Vec PoissonModel::observe(const State& u) const { return b_.multiply(u.fields.at(0)); }

State PoissonModel::solve_adjoint(const State& u, std::span<const double> m) const {
    auto c = cache_for(u, m);
    Vec r = observe(u) - data_;
    scale(-1.0 / noise_variance(), r);
    Vec p = solve_homogeneous(*c, b_.multiply_transpose(r));
    ++counters_->adjoint;
    return {{std::move(p)}, c};
}

Vec PoissonModel::misfit_gradient(const State& u, const State& p, std::span<const double> m) const {
    auto c = cache_for(u, m);
    return pairing(c->emq, u.fields.at(0), p.fields.at(0));
}

namespace {
Vec times(std::span<const double> a, std::span<const double> b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
}
}  // namespace

State PoissonModel::incremental_forward(const State& u, std::span<const double> m,
                                        std::span<const double> mhat) const {
    auto c = cache_for(u, m);
    const Vec cq = times(at_quadrature(mhat), c->emq);
    Vec rhs = weighted_action(cq, u.fields.at(0));
    scale(-1.0, rhs);
    Vec uhat = solve_homogeneous(*c, std::move(rhs));
    ++counters_->incremental_forward;
    return {{std::move(uhat)}, c};
}

State PoissonModel::incremental_adjoint(const State& u, const State& p, std::span<const double> m,
                                        std::span<const double> mhat, const State& uhat, bool gauss_newton) const {
    auto c = cache_for(u, m);
    Vec buh = b_.multiply(uhat.fields.at(0));
    scale(-1.0 / noise_variance(), buh);
    Vec rhs = b_.multiply_transpose(buh);
    if (!gauss_newton) {
        const Vec cq = times(at_quadrature(mhat), c->emq);
        axpy(-1.0, weighted_action(cq, p.fields.at(0)), rhs);
    }
    Vec phat = solve_homogeneous(*c, std::move(rhs));
    ++counters_->incremental_adjoint;
    return {{std::move(phat)}, c};
}

Vec PoissonModel::hessian_terms(const State& u, const State& p, const State& uhat, const State& phat,
                                std::span<const double> m, std::span<const double> mhat, bool gauss_newton) const {
    auto c = cache_for(u, m);
    Vec h = pairing(c->emq, u.fields.at(0), phat.fields.at(0));
    if (!gauss_newton) {
        axpy(1.0, pairing(c->emq, uhat.fields.at(0), p.fields.at(0)), h);
        axpy(1.0, pairing(times(at_quadrature(mhat), c->emq), u.fields.at(0), p.fields.at(0)), h);
    }
    return h;
}

}  // namespace pdeinv
