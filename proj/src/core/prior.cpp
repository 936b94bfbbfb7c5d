#include "pdeinv/prior.hpp"

#include <cmath>
#include <string>

#include "pdeinv/error.hpp"
#include "pdeinv/random.hpp"

namespace pdeinv {

namespace {
constexpr double kTightTol = 1e-12;
constexpr double kDefaultTol = 1e-10;
}  // namespace

BiLaplacianPrior::BiLaplacianPrior(std::shared_ptr<const FnSpace> space, const PriorParams& params, Vec mean)
    : space_(std::move(space)), params_(params) {
    if (!(params.gamma >= 0) || !(params.delta > 0))
        throw InvalidArgument("prior: need gamma >= 0 and delta > 0");
    if (!params.theta.is_spd()) throw InvalidArgument("prior: Theta must be symmetric positive definite");
    if (!(params.robin_constant > 0)) throw InvalidArgument("prior: robin constant must be positive");
    form_ = {params.gamma, params.theta, params.delta,
             params.beta >= 0 ? params.beta : std::sqrt(params.gamma * params.delta) / params.robin_constant};
    k_ = std::make_shared<const CsrMatrix>(assemble_elliptic(*space_, form_));
    m_ = std::make_shared<const CsrMatrix>(assemble_mass(*space_));
    c_m_ = rect_factor_mass(*space_);
    k_solver_ = SpdSolver(k_, kDefaultTol);
    k_solver_tight_ = SpdSolver(k_, kTightTol);
    m_solver_ = SpdSolver(m_, kTightTol);
    set_mean(mean.empty() ? Vec(space_->size(), 0.0) : std::move(mean));
}

void BiLaplacianPrior::set_mean(Vec mean) {
    if (mean.size() != size())
        throw InvalidArgument("prior: mean has " + std::to_string(mean.size()) + " entries, expected " +
                              std::to_string(size()));
    mean_ = std::move(mean);
}

void BiLaplacianPrior::apply_precision(std::span<const double> x, std::span<double> y) const {
    const Vec kx = k_->multiply(x);
    const Vec t = m_solver_.solve(kx);
    k_->multiply(t, y);
}

void BiLaplacianPrior::apply_covariance(std::span<const double> x, std::span<double> y, bool tight) const {
    const SpdSolver& k = tight ? k_solver_tight_ : k_solver_;
    const Vec t = k.solve(x);
    const Vec mt = m_->multiply(t);
    k.solve(mt, y);
}

LinearOp BiLaplacianPrior::precision_op() const {
    return {size(), [this](std::span<const double> x, std::span<double> y) { apply_precision(x, y); }, true};
}

LinearOp BiLaplacianPrior::covariance_op(bool tight) const {
    return {size(), [this, tight](std::span<const double> x, std::span<double> y) { apply_covariance(x, y, tight); },
            true};
}

LinearOp BiLaplacianPrior::mass_op() const { return LinearOp::from_matrix(m_, true); }

LinearOp BiLaplacianPrior::mass_inverse_op() const { return m_solver_.inverse_op(); }

Vec BiLaplacianPrior::solve_k(std::span<const double> b) const { return k_solver_tight_.solve(b); }

std::pair<double, Vec> BiLaplacianPrior::cost_grad(std::span<const double> m) const {
    if (m.size() != size()) throw InvalidArgument("prior: parameter has the wrong size");
    Vec d(m.begin(), m.end());
    axpy(-1.0, mean_, d);
    Vec g(size());
    apply_precision(d, g);
    return {0.5 * dot(d, g), std::move(g)};
}

Vec BiLaplacianPrior::sample_deviation(std::uint64_t seed) const {
    RandomStream rng(seed);
    const Vec eta = rng.normal_vector(c_m_.cols());
    return k_solver_tight_.solve(c_m_.multiply(eta));
}

Vec BiLaplacianPrior::sample(std::uint64_t seed) const { return mean_ + sample_deviation(seed); }

Vec BiLaplacianPrior::variance_stochastic(std::size_t probes, std::uint64_t seed) const {
    return stochastic_diagonal(covariance_op(true), probes, seed);
}

RandomizedVariance BiLaplacianPrior::variance_randomized(std::size_t rbar, std::uint64_t seed, unsigned threads) const {
    return randomized_diagonal(covariance_op(true), rbar, seed, threads);
}

Vec stochastic_diagonal(const LinearOp& a, std::size_t probes, std::uint64_t seed) {
    if (probes < 1) throw InvalidArgument("stochastic diagonal: need at least one probe");
    const std::size_t n = a.size();
    Vec num(n, 0.0), w(n);
    for (std::size_t j = 0; j < probes; ++j) {
        RandomStream rng(derive_seed(seed, j));
        const Vec z = rng.rademacher_vector(n);
        a.apply(z, w);
        for (std::size_t i = 0; i < n; ++i) num[i] += z[i] * w[i];
    }
    // z_i^2 = 1, so the denominator is exactly the probe count.
    scale(1.0 / static_cast<double>(probes), num);
    return num;
}

RandomizedVariance randomized_diagonal(const LinearOp& a, std::size_t r, std::uint64_t seed, unsigned threads) {
    if (r < 1) throw InvalidArgument("randomized diagonal: rank must be at least 1");
    const LinearOp id = LinearOp::identity(a.size());
    RandomizedVariance out;
    out.eig = double_pass(a, id, id, GhepConfig{.r = r, .l = 0, .seed = seed, .threads = threads});
    const DenseMatrix partial = variance_partial_sums(out.eig);
    out.variance = partial.column(partial.cols() - 1);
    return out;
}

DenseMatrix variance_partial_sums(const GhepResult& eig) {
    const std::size_t n = eig.v.rows(), r = eig.v.cols();
    DenseMatrix s(n, r);
    Vec acc(n, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        const auto v = eig.v.col(j);
        for (std::size_t i = 0; i < n; ++i) acc[i] += eig.lambda[j] * v[i] * v[i];
        s.set_column(j, acc);
    }
    return s;
}

}  // namespace pdeinv
