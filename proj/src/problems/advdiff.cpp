#include "pdeinv/problems/advdiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pdeinv/error.hpp"
#include "pdeinv/fem/assembly.hpp"
#include "pdeinv/fem/io.hpp"

namespace pdeinv {

double advdiff_true_parameter(double x, double y) {
    return std::min(0.5, std::exp(-100.0 * ((x - 0.35) * (x - 0.35) + (y - 0.7) * (y - 0.7))));
}

std::vector<Point> default_velocity(const Mesh& mesh, double ell) {
    constexpr double pi = std::numbers::pi;
    const auto& verts = mesh.vertices();
    Vec psi(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const Point p = verts[i];
        const double sx = std::sin(pi * p.x), sy = std::sin(pi * p.y);
        double v = sx * sx * sy * sy / pi;
        for (const Rect& h : mesh.holes()) {
            const double dx = std::max({h.x0 - p.x, 0.0, p.x - h.x1});
            const double dy = std::max({h.y0 - p.y, 0.0, p.y - h.y1});
            v *= 1.0 - std::exp(-(dx * dx + dy * dy) / (ell * ell));
        }
        psi[i] = v;
    }
    std::vector<Point> vel(mesh.num_triangles());
    double vmax = 0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto g = mesh.grad_lambda(t);
        const auto& tri = mesh.triangles()[t];
        Point gp{};
        for (int a = 0; a < 3; ++a) {
            gp.x += psi[tri[a]] * g[a].x;
            gp.y += psi[tri[a]] * g[a].y;
        }
        vel[t] = {-gp.y, gp.x};
        vmax = std::max(vmax, std::hypot(gp.x, gp.y));
    }
    if (vmax > 0)
        for (auto& v : vel) v = {v.x / vmax, v.y / vmax};
    return vel;
}

void write_velocity(const std::filesystem::path& path, const Mesh& mesh, std::span<const Point> v) {
    if (v.size() != mesh.num_triangles()) throw InvalidArgument("velocity: one vector per triangle expected");
    std::vector<Point> centers(mesh.num_triangles());
    Vec vx(v.size()), vy(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) {
        centers[t] = mesh.barycenter(t);
        vx[t] = v[t].x;
        vy[t] = v[t].y;
    }
    write_field(path, centers, {vx, vy});
}

std::vector<Point> read_velocity(const std::filesystem::path& path, const Mesh& mesh) {
    const FieldFile f = read_field(path);
    if (f.columns.size() != 2)
        throw InvalidArgument("velocity file '" + path.string() + "': expected 2 value columns, found " +
                              std::to_string(f.columns.size()));
    if (f.points.size() != mesh.num_triangles())
        throw InvalidArgument("velocity file '" + path.string() + "': " + std::to_string(f.points.size()) +
                              " rows for " + std::to_string(mesh.num_triangles()) + " triangles");
    std::vector<Point> v(f.points.size());
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = {f.columns[0][t], f.columns[1][t]};
    return v;
}

std::vector<std::size_t> observation_nodes(const AdvDiffConfig& cfg) {
    if (cfg.steps == 0 || !(cfg.t_final > 0)) throw InvalidArgument("advdiff: need t_final > 0 and steps >= 1");
    if (!(cfg.obs_interval > 0)) throw InvalidArgument("advdiff: observation interval must be positive");
    const double dt = cfg.t_final / static_cast<double>(cfg.steps);
    const double end = cfg.obs_end < 0 ? cfg.t_final : cfg.obs_end;
    if (end > cfg.t_final * (1 + 1e-12)) throw InvalidArgument("advdiff: observation window ends after t_final");
    if (cfg.obs_start < 0 || cfg.obs_start >= end) throw InvalidArgument("advdiff: empty observation window");
    std::vector<std::size_t> nodes;
    for (std::size_t i = 1;; ++i) {
        const double t = cfg.obs_start + static_cast<double>(i) * cfg.obs_interval;
        if (t > end * (1 + 1e-12)) break;
        const double k = t / dt;
        const double kr = std::round(k);
        if (std::abs(k - kr) > 1e-8)
            throw InvalidArgument("advdiff: observation time " + std::to_string(t) + " is not on the time grid");
        nodes.push_back(static_cast<std::size_t>(kr));
    }
    return nodes;
}

AdvDiffModel::AdvDiffModel(std::shared_ptr<const Mesh> mesh, AdvDiffConfig cfg, std::vector<Point> velocity,
                           std::vector<Point> obs_points, Vec data)
    : mesh_(std::move(mesh)), cfg_(cfg), velocity_(std::move(velocity)), points_(std::move(obs_points)) {
    if (!(cfg_.kappa > 0)) throw InvalidArgument("advdiff: kappa must be positive");
    if (!(cfg_.sigma2 > 0)) throw InvalidArgument("advdiff: noise variance must be positive");
    if (velocity_.size() != mesh_->num_triangles())
        throw InvalidArgument("advdiff: velocity has " + std::to_string(velocity_.size()) + " entries for " +
                              std::to_string(mesh_->num_triangles()) + " triangles");
    obs_nodes_ = observation_nodes(cfg_);
    state_ = std::make_shared<const FnSpace>(mesh_, cfg_.state_degree);
    param_ = cfg_.state_degree == 1 ? state_ : std::make_shared<const FnSpace>(mesh_, 1);
    interp_ = interpolation_matrix(*param_, *state_);
    b_ = point_observation(*state_, points_);
    m_ = std::make_shared<const CsrMatrix>(assemble_mass(*state_));
    m_param_ = cfg_.state_degree == 1 ? m_ : std::make_shared<const CsrMatrix>(assemble_mass(*param_));
    param_mass_solver_ = SpdSolver(m_param_, 1e-13);

    CsrMatrix s = m_->add(1.0 / dt(), assemble_stiffness(*state_), cfg_.kappa);
    s = s.add(1.0, assemble_advection(*state_, velocity_), 1.0);
    if (cfg_.gls) s = s.add(1.0, assemble_gls(*state_, velocity_, cfg_.kappa), 1.0);
    step_ = BandedLu(s);
    set_data(data.empty() ? Vec(obs_nodes_.size() * points_.size(), 0.0) : std::move(data));
}

void AdvDiffModel::set_data(Vec d) {
    const std::size_t expect = obs_nodes_.size() * points_.size();
    if (d.size() != expect)
        throw InvalidArgument("advdiff: data has " + std::to_string(d.size()) + " entries, expected " +
                              std::to_string(expect));
    data_ = std::move(d);
}

State AdvDiffModel::solve_forward(std::span<const double> m) const {
    if (m.size() != param_->size()) throw InvalidArgument("advdiff: parameter has the wrong size");
    if (!all_finite(m)) throw InvalidArgument("advdiff: parameter contains non-finite entries");
    State u;
    u.fields.reserve(cfg_.steps + 1);
    u.fields.push_back(interp_.multiply(m));
    Vec rhs(state_->size());
    for (std::size_t k = 0; k < cfg_.steps; ++k) {
        m_->multiply(u.fields.back(), rhs);
        scale(1.0 / dt(), rhs);
        u.fields.push_back(step_.solve(rhs));
    }
    ++counters_->forward;
    return u;
}

Vec AdvDiffModel::observe(const State& u) const {
    const std::size_t q = points_.size();
    Vec d(obs_nodes_.size() * q);
    for (std::size_t i = 0; i < obs_nodes_.size(); ++i)
        b_.multiply(u.fields.at(obs_nodes_[i]), std::span<double>(d).subspan(i * q, q));
    return d;
}

State AdvDiffModel::backward(std::span<const double> w) const {
    const std::size_t q = points_.size(), n = state_->size();
    std::vector<long> obs_at(cfg_.steps + 1, -1);
    for (std::size_t i = 0; i < obs_nodes_.size(); ++i) obs_at[obs_nodes_[i]] = static_cast<long>(i);
    State lam;
    lam.fields.assign(cfg_.steps + 1, Vec(n, 0.0));
    auto inject = [&](std::size_t k) {
        if (obs_at[k] < 0) return;
        const Vec bt = b_.multiply_transpose(w.subspan(static_cast<std::size_t>(obs_at[k]) * q, q));
        axpy(1.0, bt, lam.fields[k]);
    };
    inject(cfg_.steps);
    for (std::size_t k = cfg_.steps; k > 0; --k) {
        const Vec y = step_.solve_transpose(lam.fields[k]);
        m_->multiply(y, lam.fields[k - 1]);
        scale(1.0 / dt(), lam.fields[k - 1]);
        inject(k - 1);
    }
    return lam;
}

Vec AdvDiffModel::apply_adjoint_map(std::span<const double> w) const {
    if (w.size() != data_.size()) throw InvalidArgument("advdiff: data-space vector has the wrong size");
    return interp_.multiply_transpose(backward(w).fields[0]);
}

State AdvDiffModel::solve_adjoint(const State& u, std::span<const double>) const {
    Vec r = observe(u) - data_;
    scale(1.0 / cfg_.sigma2, r);
    ++counters_->adjoint;
    return backward(r);
}

Vec AdvDiffModel::misfit_gradient(const State&, const State& p, std::span<const double>) const {
    return interp_.multiply_transpose(p.fields.at(0));
}

Vec AdvDiffModel::initial_adjoint(const State& p) const {
    Vec g = interp_.multiply_transpose(p.fields.at(0));
    Vec x = param_mass_solver_.solve(g);
    scale(-1.0, x);
    return x;
}

State AdvDiffModel::incremental_forward(const State&, std::span<const double>, std::span<const double> mhat) const {
    State uh = solve_forward(mhat);
    --counters_->forward;
    ++counters_->incremental_forward;
    return uh;
}

State AdvDiffModel::incremental_adjoint(const State&, const State&, std::span<const double>, std::span<const double>,
                                        const State& uhat, bool) const {
    Vec r = observe(uhat);
    scale(1.0 / cfg_.sigma2, r);
    ++counters_->incremental_adjoint;
    return backward(r);
}

Vec AdvDiffModel::hessian_terms(const State&, const State&, const State&, const State& phat, std::span<const double>,
                                std::span<const double>, bool) const {
    return interp_.multiply_transpose(phat.fields.at(0));
}

LinearMapResult solve_map_cg(const InverseModel& model, const BiLaplacianPrior& prior, double rtol,
                             std::size_t max_iter) {
    SolveContext ctx(model, prior);
    const std::size_t n = model.parameter_size();
    ctx.set_parameter(Vec(n, 0.0));
    Vec rhs = ctx.gradient();
    scale(-1.0, rhs);
    const LinearOp h = ctx.hessian_op(HessianMode::full);
    const LinearOp pre = prior.covariance_op();
    CgOptions opt;
    opt.rtol = rtol;
    opt.max_iter = max_iter;
    const CgResult cg = cg_solve(h, rhs, &pre, opt);
    LinearMapResult res;
    res.m = cg.x;
    res.iterations = cg.iterations;
    res.converged = cg.reason == CgTermination::converged;
    res.gradient_norm = cg.residual_norm;
    res.initial_gradient_norm = cg.rhs_norm;
    return res;
}

}  // namespace pdeinv
