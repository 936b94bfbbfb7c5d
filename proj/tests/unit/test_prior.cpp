#include <cmath>
#include <memory>
#include <numbers>

#include "doctest.h"
#include "pdeinv/error.hpp"
#include "pdeinv/fem/mesh.hpp"
#include "pdeinv/prior.hpp"
#include "support/oracles.hpp"

using namespace pdeinv;

namespace {

std::shared_ptr<const FnSpace> p1(std::size_t n) {
    return std::make_shared<const FnSpace>(std::make_shared<const Mesh>(build_unit_square_mesh(n, n)), 1);
}

PriorParams poisson_like() {
    PriorParams p;
    p.gamma = 0.1;
    p.delta = 0.5;
    p.theta = anisotropic_tensor(std::numbers::pi / 4, 2.0, 0.5);
    return p;
}

struct DenseRef {
    DenseMatrix k, m, r, rinv;
};

DenseRef dense_ref(const BiLaplacianPrior& prior) {
    DenseRef d;
    d.k = oracle::dense(prior.stiffness());
    d.m = oracle::dense(prior.mass());
    const DenseMatrix kinv = oracle::inverse(d.k);
    d.r = oracle::matmul(d.k, oracle::matmul(oracle::inverse(d.m), d.k));
    d.rinv = oracle::matmul(kinv, oracle::matmul(d.m, kinv));
    return d;
}

Vec diag(const DenseMatrix& a) {
    Vec d(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) d[i] = a(i, i);
    return d;
}

double m_rel_error(const CsrMatrix& m, const Vec& est, const Vec& ref) {
    const Vec e = est - ref;
    return std::sqrt(dot(e, m.multiply(e)) / dot(ref, m.multiply(ref)));
}

}  // namespace

TEST_CASE("Robin coefficient and construction errors") {
    const auto space = p1(4);
    const BiLaplacianPrior def(space, poisson_like());
    CHECK(def.beta() == doctest::Approx(std::sqrt(0.05) / 1.42).epsilon(1e-15));
    PriorParams p = poisson_like();
    p.beta = 0.3;
    CHECK(BiLaplacianPrior(space, p).beta() == 0.3);
    p.robin_constant = 2.0;
    p.beta = -1;
    CHECK(BiLaplacianPrior(space, p).beta() == doctest::Approx(std::sqrt(0.05) / 2.0));
    p.delta = 0;
    CHECK_THROWS_AS(BiLaplacianPrior(space, p), InvalidArgument);
    CHECK_THROWS_AS(BiLaplacianPrior(space, poisson_like(), Vec(3, 0.0)), InvalidArgument);
}

TEST_CASE("prior cost and gradient") {
    const auto space = p1(6);
    const std::size_t n = space->size();
    const Vec mean = oracle::random_vector(n, 4);
    const BiLaplacianPrior prior(space, poisson_like(), mean);
    const DenseRef ref = dense_ref(prior);

    auto [c0, g0] = prior.cost_grad(mean);
    CHECK(c0 == 0.0);
    CHECK(norm2(g0) == 0.0);

    Vec mj = mean;
    mj[7] += 1.0;
    auto [cj, gj] = prior.cost_grad(mj);
    CHECK(cj == doctest::Approx(0.5 * ref.r(7, 7)).epsilon(1e-10));
    CHECK(oracle::rel_diff(gj, ref.r.column(7)) < 1e-10);

    const Vec m = oracle::random_vector(n, 5);
    auto [c, g] = prior.cost_grad(m);
    const Vec d = m - mean;
    const Vec rd = ref.r * d;
    CHECK(std::abs(c - 0.5 * dot(d, rd)) < 1e-10 * std::abs(c));
    CHECK(oracle::rel_diff(g, rd) < 1e-10);

    for (std::uint64_t s = 0; s < 3; ++s) {
        const Vec dir = oracle::random_vector(n, 50 + s);
        const double eps = 1e-5;
        const double fd = (prior.cost(m + eps * dir) - prior.cost(m - eps * dir)) / (2 * eps);
        CHECK(std::abs(fd - dot(g, dir)) / std::abs(dot(g, dir)) < 1e-6);
    }

    Vec y(n), z(n);
    prior.apply_precision(d, y);
    prior.apply_covariance(y, z, true);
    CHECK(oracle::rel_diff(z, d) < 1e-9);
    CHECK(oracle::rel_diff(prior.covariance_op()(d), ref.rinv * d) < 1e-8);
}

TEST_CASE("sampling factor reproduces the covariance") {
    const auto space = p1(8);
    const BiLaplacianPrior prior(space, poisson_like());
    const DenseRef ref = dense_ref(prior);
    const DenseMatrix c = oracle::matmul(oracle::inverse(ref.k), oracle::dense(prior.mass_factor()));
    CHECK(oracle::rel_diff(oracle::matmul(c, oracle::transpose(c)), ref.rinv) < 1e-10);

    const Vec a = prior.sample(17), b = prior.sample(17), other = prior.sample(18);
    CHECK(a == b);
    CHECK(a != other);
}

TEST_CASE("Monte Carlo pointwise variance of prior samples") {
    const auto space = p1(8);
    const BiLaplacianPrior prior(space, poisson_like());
    const Vec exact = diag(dense_ref(prior).rinv);
    const std::size_t n = space->size(), ns = 5000;
    Vec sq(n, 0.0);
    for (std::uint64_t s = 0; s < ns; ++s) {
        const Vec x = prior.sample_deviation(s);
        for (std::size_t i = 0; i < n; ++i) sq[i] += x[i] * x[i];
    }
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point p = space->dof_coords()[i];
        if (p.x <= 0 || p.x >= 1 || p.y <= 0 || p.y >= 1) continue;
        worst = std::max(worst, std::abs(sq[i] / ns - exact[i]) / exact[i]);
    }
    MESSAGE("worst interior relative variance error " << worst);
    CHECK(worst < 0.05);

    PriorParams stiffer = poisson_like();
    stiffer.delta *= 4;
    const BiLaplacianPrior prior4(space, stiffer);
    Vec sq4(n, 0.0);
    for (std::uint64_t s = 0; s < 500; ++s) {
        const Vec x = prior4.sample_deviation(s);
        for (std::size_t i = 0; i < n; ++i) sq4[i] += x[i] * x[i];
    }
    double mean1 = 0, mean4 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mean1 += sq[i] / ns;
        mean4 += sq4[i] / 500;
    }
    CHECK(mean4 < mean1);
}

TEST_CASE("stochastic diagonal estimator") {
    const Vec ones = stochastic_diagonal(LinearOp::identity(30), 3, 1);
    for (double v : ones) CHECK(v == 1.0);

    const auto space = p1(8);
    const BiLaplacianPrior prior(space, poisson_like());
    const Vec exact = diag(dense_ref(prior).rinv);
    CHECK(m_rel_error(prior.mass(), prior.variance_stochastic(200, 3), exact) < 0.3);

    double prev = 1e300;
    for (std::size_t s : {5u, 20u, 80u}) {
        double avg = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed)
            avg += m_rel_error(prior.mass(), prior.variance_stochastic(s, 100 + seed), exact) / 10;
        CHECK(avg < prev);
        prev = avg;
    }
}

TEST_CASE("randomized diagonal estimator") {
    const auto space8 = p1(8);
    const BiLaplacianPrior prior8(space8, poisson_like());
    const Vec exact8 = diag(dense_ref(prior8).rinv);
    const std::size_t n8 = space8->size();
    const RandomizedVariance full = prior8.variance_randomized(n8, 1);
    CHECK(oracle::rel_diff(full.variance, exact8) < 1e-8);
    CHECK(full.eig.a_applies == 2 * n8);

    const RandomizedVariance part = prior8.variance_randomized(30, 2);
    const DenseMatrix sums = variance_partial_sums(part.eig);
    bool monotone = true;
    for (std::size_t j = 1; j < sums.cols(); ++j)
        for (std::size_t i = 0; i < n8; ++i) monotone = monotone && sums(i, j) >= sums(i, j - 1);
    CHECK(monotone);

    const auto space16 = p1(16);
    const BiLaplacianPrior prior16(space16, poisson_like());
    const Vec exact16 = diag(dense_ref(prior16).rinv);
    const double e_rand = m_rel_error(prior16.mass(), prior16.variance_randomized(50, 7).variance, exact16);
    const double e_stoch = m_rel_error(prior16.mass(), prior16.variance_stochastic(50, 7), exact16);
    MESSAGE("16x16: randomized r=50 " << e_rand << ", stochastic s=50 " << e_stoch);
    CHECK(e_rand < e_stoch);

    const double e8 = m_rel_error(prior8.mass(), prior8.variance_randomized(20, 7).variance, exact8);
    const double e16 = m_rel_error(prior16.mass(), prior16.variance_randomized(20, 7).variance, exact16);
    MESSAGE("r=20: 8x8 " << e8 << ", 16x16 " << e16);
    CHECK(std::max(e8, e16) / std::min(e8, e16) < 2.0);
}
