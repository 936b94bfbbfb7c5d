#include "pdeinv/posterior.hpp"

#include <cmath>
#include <sstream>

#include "pdeinv/error.hpp"

namespace pdeinv {

std::string_view to_string(GhepSolver s) { return s == GhepSolver::single_pass ? "single" : "double"; }

GhepSolver parse_ghep_solver(std::string_view text) {
    if (text == "single") return GhepSolver::single_pass;
    if (text == "double") return GhepSolver::double_pass;
    throw InvalidArgument("unknown eigensolver '" + std::string(text) + "' (single, double)");
}

LaplacePosterior::LaplacePosterior(const InverseModel& model, const BiLaplacianPrior& prior, Vec m_map,
                                   const PosteriorConfig& cfg)
    : prior_(&prior), m_map_(std::move(m_map)) {
    if (m_map_.size() != prior.size()) throw InvalidArgument("posterior: MAP point has the wrong size");
    SolveContext ctx(model, prior);
    ctx.set_parameter(m_map_);
    const LinearOp a = ctx.misfit_hessian_op(cfg.gauss_newton);
    const LinearOp b = prior.precision_op(), binv = prior.covariance_op(true);
    ghep_ = cfg.solver == GhepSolver::double_pass ? double_pass(a, b, binv, cfg.ghep) : single_pass(a, b, binv, cfg.ghep);
    keep(ghep_.lambda, ghep_.v, cfg.lambda_cut);

    if (cfg.check_eigenpairs) {
        for (std::size_t i = 0; i < (rank() + 1) / 2; ++i) {
            const Vec vi = v_.column(i);
            const Vec rv = b(vi);
            const double res = norm2(a(vi) - lambda_[i] * rv) / (lambda_[i] * norm2(rv));
            eigen_residual_ = std::max(eigen_residual_, res);
        }
        if (eigen_residual_ > 1e-4) {
            std::ostringstream os;
            os << "eigenpair residual " << eigen_residual_ << " exceeds 1e-4; increase oversampling";
            warnings_.push_back(os.str());
        }
    }
}

LaplacePosterior::LaplacePosterior(const BiLaplacianPrior& prior, Vec m_map, Vec lambda, DenseMatrix v,
                                   double lambda_cut)
    : prior_(&prior), m_map_(std::move(m_map)) {
    if (m_map_.size() != prior.size() || v.rows() != prior.size() || v.cols() != lambda.size())
        throw InvalidArgument("posterior: eigenpair dimensions do not match the prior");
    keep(std::move(lambda), std::move(v), lambda_cut);
}

void LaplacePosterior::keep(Vec lambda, DenseMatrix v, double lambda_cut) {
    spectrum_ = lambda;
    std::size_t k = 0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < -1e-8) {
            std::ostringstream os;
            os << "eigenvalue " << i + 1 << " is negative (" << lambda[i] << "); clipped";
            warnings_.push_back(os.str());
        }
        if (lambda[i] > lambda_cut) k = i + 1;
    }
    lambda_.assign(lambda.begin(), lambda.begin() + static_cast<std::ptrdiff_t>(k));
    v_ = v.leading_columns(k);
    d_.resize(k);
    s_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        d_[i] = lambda_[i] / (1 + lambda_[i]);
        s_[i] = 1 - 1 / std::sqrt(1 + lambda_[i]);
    }
}

Vec LaplacePosterior::apply_hinv(std::span<const double> w) const {
    Vec y(w.size());
    prior_->apply_covariance(w, y, true);
    for (std::size_t i = 0; i < rank(); ++i) {
        const auto vi = v_.col(i);
        axpy(-d_[i] * dot(vi, w), vi, y);
    }
    return y;
}

Vec LaplacePosterior::apply_sample_factor(std::span<const double> x) const {
    Vec y(x.begin(), x.end());
    if (rank() == 0) return y;
    Vec rx(x.size());
    prior_->apply_precision(x, rx);
    for (std::size_t i = 0; i < rank(); ++i) {
        const auto vi = v_.col(i);
        axpy(-s_[i] * dot(vi, rx), vi, y);
    }
    return y;
}

Vec LaplacePosterior::sample(std::uint64_t seed) const {
    Vec y = apply_sample_factor(prior_->sample_deviation(seed));
    axpy(1.0, m_map_, y);
    return y;
}

Vec LaplacePosterior::variance_correction() const {
    Vec c(prior_->size(), 0.0);
    for (std::size_t i = 0; i < rank(); ++i) {
        const auto vi = v_.col(i);
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += d_[i] * vi[j] * vi[j];
    }
    return c;
}

Vec LaplacePosterior::variance(std::span<const double> prior_variance) const {
    if (prior_variance.size() != prior_->size()) throw InvalidArgument("posterior: prior variance has the wrong size");
    Vec v(prior_variance.begin(), prior_variance.end());
    axpy(-1.0, variance_correction(), v);
    return v;
}

}  // namespace pdeinv
