#include "pdeinv/newtoncg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "pdeinv/error.hpp"
#include "pdeinv/fem/io.hpp"
#include "pdeinv/linalg/krylov.hpp"

namespace pdeinv {

std::string_view to_string(NewtonStatus s) {
    switch (s) {
        case NewtonStatus::converged: return "converged";
        case NewtonStatus::max_iter: return "max_iter";
        case NewtonStatus::line_search_failed: return "line_search_failed";
    }
    return "?";
}

void NewtonTrace::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "iter,cost,misfit,reg,gradnorm,cg_iters,alpha\n";
    for (const auto& r : rows)
        out << r.iter << ',' << format_double(r.cost) << ',' << format_double(r.misfit) << ','
            << format_double(r.reg) << ',' << format_double(r.gradnorm) << ',' << r.cg_iters << ','
            << format_double(r.alpha) << '\n';
}

std::size_t NewtonResult::total_cg_iterations() const {
    std::size_t s = 0;
    for (const auto& r : trace.rows) s += r.cg_iters;
    return s;
}

LineSearchResult armijo_linesearch(const std::function<double(std::span<const double>)>& cost,
                                   std::span<const double> m, std::span<const double> direction,
                                   std::span<const double> g, double cost0, const NewtonConfig& cfg,
                                   const std::function<Vec()>& fallback) {
    if (direction.size() != m.size() || g.size() != m.size())
        throw InvalidArgument("line search: size mismatch");
    LineSearchResult res;
    Vec d(direction.begin(), direction.end());
    double slope = dot(g, d);
    if (!(slope < 0)) {
        if (!fallback) throw InvalidArgument("line search: not a descent direction");
        d = fallback();
        slope = dot(g, d);
        res.direction_replaced = true;
        if (!(slope < 0)) throw SolverError("line search: fallback direction is not a descent direction");
    }
    Vec trial(m.size());
    double alpha = 1.0;
    for (std::size_t j = 0; j <= cfg.max_backtracking_iter; ++j, alpha *= 0.5) {
        for (std::size_t i = 0; i < m.size(); ++i) trial[i] = m[i] + alpha * d[i];
        const double c = cost(trial);
        ++res.evaluations;
        if (std::isfinite(c) && c < cost0 + alpha * cfg.c_armijo * slope) {
            res.m = std::move(trial);
            res.alpha = alpha;
            res.cost = c;
            res.success = true;
            return res;
        }
    }
    res.m.assign(m.begin(), m.end());
    res.cost = cost0;
    return res;
}

NewtonResult newton_cg(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m0,
                       const NewtonConfig& cfg) {
    if (m0.size() != model.parameter_size()) throw InvalidArgument("newton_cg: m0 has the wrong size");
    if (!(cfg.grad_tol > 0)) throw InvalidArgument("newton_cg: grad_tol must be positive");
    if (cfg.hessian == HessianMode::misfit_only)
        throw InvalidArgument("newton_cg: Hessian mode must be full or gauss_newton");

    SolveContext ctx(model, prior);
    ctx.set_parameter(m0);
    const LinearOp pre = prior.covariance_op();
    NewtonResult res;
    CostParts c = ctx.cost();
    Vec g = ctx.gradient();
    const double g0 = norm2(g);
    const double tol = std::max(cfg.grad_tol, cfg.rel_grad_tol * g0);

    for (std::size_t it = 0;; ++it) {
        NewtonIteration row;
        row.iter = it;
        row.cost = c.total;
        row.misfit = c.misfit;
        row.reg = c.reg;
        row.gradnorm = norm2(g);
        if (row.gradnorm <= tol) {
            res.trace.rows.push_back(row);
            res.trace.status = NewtonStatus::converged;
            break;
        }
        if (it == cfg.max_iter) {
            res.trace.rows.push_back(row);
            res.trace.status = NewtonStatus::max_iter;
            break;
        }

        row.eta = std::min(cfg.eta_max, std::sqrt(row.gradnorm / g0));
        Vec rhs = g;
        scale(-1.0, rhs);
        CgOptions opt;
        opt.rtol = row.eta;
        opt.max_iter = cfg.cg_max_iter;
        opt.monitor_curvature = true;
        const CgResult cg = cg_solve(ctx.hessian_op(cfg.hessian), rhs, &pre, opt);
        row.cg_iters = cg.iterations;
        row.cg_residual = cg.residual_norm;
        row.cg_reason = std::string(to_string(cg.reason));

        auto steepest = [&] {
            Vec d = pre(g);
            scale(-1.0, d);
            return d;
        };
        Vec dir = cg.iterations == 0 || norm2(cg.x) == 0.0 ? steepest() : cg.x;
        if (cg.iterations == 0) row.note = "preconditioned gradient step";

        const Vec m = ctx.parameter();
        // a trial point where the forward problem breaks down counts as a rejected step
        const auto cost_fn = [&](std::span<const double> x) {
            ctx.set_parameter(x);
            try {
                return ctx.cost().total;
            } catch (const SolverError&) {
                return std::numeric_limits<double>::infinity();
            } catch (const NotPositiveDefinite&) {
                return std::numeric_limits<double>::infinity();
            }
        };
        const LineSearchResult ls = armijo_linesearch(cost_fn, m, dir, g, c.total, cfg, steepest);
        if (ls.direction_replaced) row.note = "ascent direction replaced by preconditioned gradient";
        if (!ls.success) {
            ctx.set_parameter(m);
            res.trace.rows.push_back(row);
            res.trace.status = NewtonStatus::line_search_failed;
            break;
        }
        row.alpha = ls.alpha;
        if (cfg.record_steps) row.step = dir;
        res.trace.rows.push_back(row);
        ctx.set_parameter(ls.m);
        c = ctx.cost();
        g = ctx.gradient();
    }
    res.m = ctx.parameter();
    return res;
}

}  // namespace pdeinv
