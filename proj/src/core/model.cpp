#include "pdeinv/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pdeinv/error.hpp"
#include "pdeinv/fem/io.hpp"
#include "pdeinv/random.hpp"

namespace pdeinv {

std::string_view to_string(HessianMode mode) {
    switch (mode) {
        case HessianMode::full: return "full";
        case HessianMode::misfit_only: return "misfit_only";
        case HessianMode::gauss_newton: return "gauss_newton";
    }
    return "?";
}

HessianMode parse_hessian_mode(std::string_view text) {
    if (text == "full") return HessianMode::full;
    if (text == "misfit_only") return HessianMode::misfit_only;
    if (text == "gauss_newton") return HessianMode::gauss_newton;
    throw InvalidArgument("unknown Hessian mode '" + std::string(text) + "' (full, misfit_only, gauss_newton)");
}

double InverseModel::misfit_cost(const State& u) const {
    const Vec r = observe(u) - data();
    return 0.5 * dot(r, r) / noise_variance();
}

SolveContext::SolveContext(const InverseModel& model, const BiLaplacianPrior& prior)
    : model_(&model), prior_(&prior), m_(prior.mean()) {
    if (model.parameter_size() != prior.size()) throw InvalidArgument("model and prior parameter sizes differ");
}

void SolveContext::set_parameter(std::span<const double> m) {
    if (m.size() != model_->parameter_size()) throw InvalidArgument("parameter has the wrong size");
    if (!all_finite(m)) throw InvalidArgument("parameter contains non-finite entries");
    if (std::equal(m.begin(), m.end(), m_.begin(), m_.end())) return;
    m_.assign(m.begin(), m.end());
    u_.reset();
    p_.reset();
}

const State& SolveContext::state() {
    if (!u_) u_ = model_->solve_forward(m_);
    return *u_;
}

const State& SolveContext::adjoint() {
    if (!p_) p_ = model_->solve_adjoint(state(), m_);
    return *p_;
}

CostParts SolveContext::cost() {
    CostParts c;
    c.misfit = model_->misfit_cost(state());
    c.reg = prior_->cost(m_);
    c.total = c.misfit + c.reg;
    return c;
}

Vec SolveContext::gradient() {
    Vec g = model_->misfit_gradient(state(), adjoint(), m_);
    axpy(1.0, prior_->cost_grad(m_).second, g);
    return g;
}

namespace {
Vec apply_hessian(const InverseModel& model, const BiLaplacianPrior& prior, const State& u, const State& p,
                  std::span<const double> m, std::span<const double> mhat, bool gn, bool with_prior) {
    const State uhat = model.incremental_forward(u, m, mhat);
    const State phat = model.incremental_adjoint(u, p, m, mhat, uhat, gn);
    Vec h = model.hessian_terms(u, p, uhat, phat, m, mhat, gn);
    if (with_prior) {
        Vec r(h.size());
        prior.apply_precision(mhat, r);
        axpy(1.0, r, h);
    }
    return h;
}
}  // namespace

Vec SolveContext::hessian_apply(std::span<const double> mhat, HessianMode mode) {
    if (mhat.size() != m_.size()) throw InvalidArgument("Hessian direction has the wrong size");
    return apply_hessian(*model_, *prior_, state(), adjoint(), m_, mhat, mode == HessianMode::gauss_newton,
                         mode != HessianMode::misfit_only);
}

LinearOp SolveContext::hessian_op(HessianMode mode) {
    return make_op(mode == HessianMode::gauss_newton, mode != HessianMode::misfit_only);
}

LinearOp SolveContext::misfit_hessian_op(bool gauss_newton) { return make_op(gauss_newton, false); }

LinearOp SolveContext::make_op(bool gn, bool with_prior) {
    auto u = std::make_shared<const State>(state());
    auto p = std::make_shared<const State>(adjoint());
    auto m = std::make_shared<const Vec>(m_);
    const InverseModel* model = model_;
    const BiLaplacianPrior* prior = prior_;
    return {m_.size(),
            [=](std::span<const double> x, std::span<double> y) {
                const Vec h = apply_hessian(*model, *prior, *u, *p, *m, x, gn, with_prior);
                std::copy(h.begin(), h.end(), y.begin());
            },
            true};
}

CostParts total_cost(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m) {
    SolveContext ctx(model, prior);
    ctx.set_parameter(m);
    return ctx.cost();
}

Vec gradient(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m) {
    SolveContext ctx(model, prior);
    ctx.set_parameter(m);
    return ctx.gradient();
}

Vec hessian_apply(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m,
                  std::span<const double> mhat, HessianMode mode) {
    SolveContext ctx(model, prior);
    ctx.set_parameter(m);
    return ctx.hessian_apply(mhat, mode);
}

// ---------------------------------------------------------------------------

std::string VerifyReport::text() const {
    std::ostringstream os;
    os << "gradient finite-difference check (relative error of <g, dm>)\n";
    for (const auto& p : gradient_sweep) os << "  eps = " << p.eps << "  error = " << p.error << '\n';
    os << "  minimum error: " << gradient_min_error << '\n';
    os << "Hessian symmetry defect: " << hessian_symmetry << '\n';
    os << "Hessian finite-difference error: " << hessian_fd_error << '\n';
    os << "Gauss-Newton minimum Rayleigh quotient: " << gn_min_curvature << '\n';
    if (failures.empty()) {
        os << "status: PASS\n";
    } else {
        os << "status: FAIL\n";
        for (const auto& f : failures) os << "  - " << f << '\n';
    }
    return os.str();
}

void VerifyReport::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "eps,fd_error\n";
    for (const auto& p : gradient_sweep) out << format_double(p.eps) << ',' << format_double(p.error) << '\n';
}

VerifyReport verify_model(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m0,
                          std::uint64_t seed, const VerifyTolerances& tol) {
    VerifyReport rep;
    try {
        const std::size_t n = model.parameter_size();
        RandomStream rng(derive_seed(seed, 0));
        const Vec dir = rng.normal_vector(n);
        SolveContext ctx(model, prior);
        ctx.set_parameter(m0);
        const Vec g = ctx.gradient();
        const double gd = dot(g, dir);
        const Vec m(m0.begin(), m0.end());
        rep.gradient_min_error = INFINITY;
        for (double eps = 1e-3; eps > 0.5e-8; eps /= 10) {
            const double jp = total_cost(model, prior, m + eps * dir).total;
            const double jm = total_cost(model, prior, m - eps * dir).total;
            const double fd = (jp - jm) / (2 * eps);
            const double err = std::abs(fd - gd) / std::max(std::abs(gd), 1e-300);
            rep.gradient_sweep.push_back({eps, err});
            rep.gradient_min_error = std::min(rep.gradient_min_error, err);
        }
        if (!(rep.gradient_min_error < tol.gradient))
            rep.failures.push_back("gradient FD error " + std::to_string(rep.gradient_min_error) + " >= " +
                                   std::to_string(tol.gradient));

        const Vec a = rng.normal_vector(n), b = rng.normal_vector(n);
        for (HessianMode mode : {HessianMode::full, HessianMode::gauss_newton}) {
            const Vec ha = ctx.hessian_apply(a, mode), hb = ctx.hessian_apply(b, mode);
            const double defect = std::abs(dot(ha, b) - dot(a, hb)) / (norm2(ha) * norm2(b));
            rep.hessian_symmetry = std::max(rep.hessian_symmetry, defect);
        }
        if (!(rep.hessian_symmetry < tol.symmetry))
            rep.failures.push_back("Hessian symmetry defect " + std::to_string(rep.hessian_symmetry));

        const double eps = 1e-5;
        const Vec hd = ctx.hessian_apply(dir, HessianMode::full);
        const Vec gp = gradient(model, prior, m + eps * dir), gm = gradient(model, prior, m - eps * dir);
        Vec fd = gp - gm;
        scale(1.0 / (2 * eps), fd);
        rep.hessian_fd_error = norm2(fd - hd) / norm2(hd);
        if (!(rep.hessian_fd_error < tol.hessian_fd))
            rep.failures.push_back("Hessian FD error " + std::to_string(rep.hessian_fd_error));

        rep.gn_min_curvature = INFINITY;
        for (int k = 0; k < 3; ++k) {
            const Vec x = rng.normal_vector(n);
            const Vec hx = ctx.hessian_apply(x, HessianMode::gauss_newton);
            Vec rx(n);
            prior.apply_precision(x, rx);
            rep.gn_min_curvature = std::min(rep.gn_min_curvature, (dot(hx, x) - dot(rx, x)) / dot(x, x));
        }
        if (rep.gn_min_curvature < -1e-10) rep.failures.push_back("Gauss-Newton misfit Hessian is indefinite");
    } catch (const std::exception& e) {
        rep.failures.push_back(std::string("exception: ") + e.what());
    }
    return rep;
}

Vec make_synthetic_data(const InverseModel& model, std::span<const double> m_true, double noise_std,
                        std::uint64_t seed) {
    Vec d = model.observe(model.solve_forward(m_true));
    RandomStream rng(seed);
    for (auto& v : d) v += noise_std * rng.normal();
    return d;
}

namespace {
class SignFlippedAdjoint final : public InverseModel {
public:
    explicit SignFlippedAdjoint(std::shared_ptr<InverseModel> inner) : inner_(std::move(inner)) {}
    const FnSpace& parameter_space() const override { return inner_->parameter_space(); }
    State solve_forward(std::span<const double> m) const override { return inner_->solve_forward(m); }
    Vec observe(const State& u) const override { return inner_->observe(u); }
    State solve_adjoint(const State& u, std::span<const double> m) const override {
        State p = inner_->solve_adjoint(u, m);
        for (auto& f : p.fields) scale(-1.0, f);
        return p;
    }
    Vec misfit_gradient(const State& u, const State& p, std::span<const double> m) const override {
        return inner_->misfit_gradient(u, p, m);
    }
    State incremental_forward(const State& u, std::span<const double> m, std::span<const double> mhat) const override {
        return inner_->incremental_forward(u, m, mhat);
    }
    State incremental_adjoint(const State& u, const State& p, std::span<const double> m, std::span<const double> mhat,
                              const State& uhat, bool gn) const override {
        return inner_->incremental_adjoint(u, p, m, mhat, uhat, gn);
    }
    Vec hessian_terms(const State& u, const State& p, const State& uhat, const State& phat, std::span<const double> m,
                      std::span<const double> mhat, bool gn) const override {
        return inner_->hessian_terms(u, p, uhat, phat, m, mhat, gn);
    }
    const Vec& data() const override { return inner_->data(); }
    void set_data(Vec d) override { inner_->set_data(std::move(d)); }
    double noise_variance() const override { return inner_->noise_variance(); }

private:
    std::shared_ptr<InverseModel> inner_;
};
}  // namespace

std::shared_ptr<InverseModel> make_sign_flipped_adjoint(std::shared_ptr<InverseModel> model) {
    return std::make_shared<SignFlippedAdjoint>(std::move(model));
}

}  // namespace pdeinv
