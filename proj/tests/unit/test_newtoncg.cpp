#include <cmath>
#include <memory>
#include <fstream>
#include <numbers>
#include <string>

#include "doctest.h"
#include "pdeinv/error.hpp"
#include "pdeinv/newtoncg.hpp"
#include "pdeinv/problems/advdiff.hpp"
#include "pdeinv/problems/poisson.hpp"
#include "support/oracles.hpp"

using namespace pdeinv;

namespace {

struct Problem {
    std::shared_ptr<InverseModel> model;
    std::shared_ptr<BiLaplacianPrior> prior;
};

Problem poisson(std::size_t n) {
    auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(n, n));
    auto pts = random_points(*mesh, {0.1, 0.1, 0.9, 0.5}, 50, 7);
    auto model = std::make_shared<PoissonModel>(mesh, PoissonConfig{}, pts);
    PriorParams pp;
    pp.gamma = 0.1;
    pp.delta = 0.5;
    pp.theta = anisotropic_tensor(std::numbers::pi / 4, 2.0, 0.5);
    auto prior = std::make_shared<BiLaplacianPrior>(model->parameter_space_ptr(), pp);
    const Vec truth = model->parameter_space().interpolate(poisson_true_parameter);
    model->set_data(make_synthetic_data(*model, truth, 0.01, 11));
    return {model, prior};
}

Problem tiny_advdiff() {
    auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(6, 6));
    AdvDiffConfig c;
    c.steps = 8;
    c.obs_interval = 0.5;
    auto pts = random_points(*mesh, {0, 0, 1, 1}, 20, 5);
    auto model = std::make_shared<AdvDiffModel>(mesh, c, default_velocity(*mesh), pts);
    PriorParams pp;
    pp.gamma = 1;
    pp.delta = 8;
    auto prior = std::make_shared<BiLaplacianPrior>(model->parameter_space_ptr(), pp);
    const Vec truth = model->parameter_space().interpolate(advdiff_true_parameter);
    model->set_data(make_synthetic_data(*model, truth, 1e-3, 3));
    return {model, prior};
}

Vec dense_map(const Problem& p) {
    const std::size_t n = p.model->parameter_size(), q = p.model->num_observations();
    DenseMatrix f(q, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vec e(n, 0.0);
        e[j] = 1.0;
        f.set_column(j, p.model->observe(p.model->solve_forward(e)));
    }
    const DenseMatrix k = oracle::dense(p.prior->stiffness());
    const DenseMatrix r = oracle::matmul(k, oracle::matmul(oracle::inverse(oracle::dense(p.prior->mass())), k));
    const double is2 = 1.0 / p.model->noise_variance();
    const DenseMatrix h = is2 * oracle::matmul(oracle::transpose(f), f) + r;
    return oracle::solve(h, is2 * (oracle::transpose(f) * p.model->data()));
}


}  // namespace

TEST_CASE("Armijo backtracking") {
    const NewtonConfig cfg;
    const auto quad = [](std::span<const double> x) { return (x[0] - 3) * (x[0] - 3); };
    const Vec m{0.0}, d{3.0}, g{-6.0};
    const LineSearchResult q = armijo_linesearch(quad, m, d, g, quad(m), cfg);
    CHECK(q.success);
    CHECK(q.alpha == 1.0);
    CHECK(q.m[0] == 3.0);
    CHECK(q.evaluations == 1);

    const auto quartic = [](std::span<const double> x) { return std::pow(x[0], 4); };
    const Vec m1{1.0}, g1{4.0}, d1{-4.0};
    const LineSearchResult s = armijo_linesearch(quartic, m1, d1, g1, 1.0, cfg);
    CHECK(s.success);
    CHECK(s.alpha == 0.25);
    CHECK(s.evaluations == 3);

    // ascent direction: rejected without a fallback, replaced with one
    const Vec up{4.0};
    CHECK_THROWS_AS(armijo_linesearch(quartic, m1, up, g1, 1.0, cfg), InvalidArgument);
    const LineSearchResult r = armijo_linesearch(quartic, m1, up, g1, 1.0, cfg, [] { return Vec{-0.1}; });
    CHECK(r.direction_replaced);
    CHECK(r.success);
    CHECK(r.cost < 1.0);

    const auto flat_up = [](std::span<const double> x) { return 1.0 + x[0] * x[0] * 0.0 + 1e-3; };
    NewtonConfig few = cfg;
    few.max_backtracking_iter = 3;
    const LineSearchResult f = armijo_linesearch(flat_up, m1, d1, g1, 1.0, few);
    CHECK_FALSE(f.success);
    CHECK(f.evaluations == 4);
    CHECK(f.m == m1);
}

TEST_CASE("linear problem: Newton step is the MAP point") {
    const Problem p = tiny_advdiff();
    const Vec ref = dense_map(p);
    const Vec m0(p.model->parameter_size(), 0.0);

    NewtonConfig exact;
    exact.eta_max = 1e-10;
    exact.rel_grad_tol = 1e-8;
    const NewtonResult r = newton_cg(*p.model, *p.prior, m0, exact);
    CHECK(r.converged());
    CHECK(r.iterations() <= 2);
    CHECK(oracle::rel_diff(r.m, ref) < 1e-6);

    const NewtonResult d = newton_cg(*p.model, *p.prior, m0);
    MESSAGE("default forcing: " << d.iterations() << " Newton iterations, " << d.total_cg_iterations() << " CG");
    CHECK(d.converged());
    CHECK(d.trace.rows.back().gradnorm <= 1e-6 * d.trace.rows.front().gradnorm);
}

TEST_CASE("stationary start takes no iterations") {
    Problem p = tiny_advdiff();
    p.model->set_data(Vec(p.model->num_observations(), 0.0));
    const NewtonResult r = newton_cg(*p.model, *p.prior, Vec(p.model->parameter_size(), 0.0));
    CHECK(r.converged());
    CHECK(r.iterations() == 0);
    CHECK(r.trace.rows.size() == 1);
    CHECK(r.trace.rows[0].gradnorm == 0.0);
}

TEST_CASE("nonlinear problem: forcing, monotone decrease") {
    const Problem p = poisson(12);
    const std::size_t n = p.model->parameter_size();
    NewtonConfig cfg;
    cfg.record_steps = true;
    const Vec m0(n, 0.0);
    const NewtonResult r = newton_cg(*p.model, *p.prior, m0, cfg);
    CHECK(r.converged());
    MESSAGE(r.iterations() << " Newton iterations, " << r.total_cg_iterations() << " CG");
    const auto& rows = r.trace.rows;
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].cost < rows[i - 1].cost);
    CHECK(rows.back().gradnorm <= 1e-6 * rows.front().gradnorm);

    // replay: ||H_i mhat_i + g_i|| <= eta_i ||g_i|| with an independent Hessian apply
    Vec m = m0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const Vec g = gradient(*p.model, *p.prior, m);
        CHECK(norm2(g) == doctest::Approx(rows[i].gradnorm).epsilon(1e-10));
        CHECK(rows[i].eta == doctest::Approx(std::min(0.5, std::sqrt(rows[i].gradnorm / rows[0].gradnorm))));
        if (rows[i].cg_reason == "converged") {
            const Vec res = hessian_apply(*p.model, *p.prior, m, rows[i].step, HessianMode::full) + g;
            CHECK(norm2(res) <= rows[i].eta * norm2(g) * (1 + 1e-6));
        }
        axpy(rows[i].alpha, rows[i].step, m);
    }
    CHECK(oracle::rel_diff(m, r.m) < 1e-14);

    NewtonConfig gn = cfg;
    gn.hessian = HessianMode::gauss_newton;
    const NewtonResult rg = newton_cg(*p.model, *p.prior, m0, gn);
    CHECK(rg.converged());
    CHECK(oracle::rel_diff(rg.m, r.m) < 1e-4);
}

TEST_CASE("without CG the method is preconditioned steepest descent") {
    const Problem p = poisson(8);
    NewtonConfig cfg;
    cfg.cg_max_iter = 0;
    cfg.max_iter = 5;
    cfg.max_backtracking_iter = 30;  // unscaled gradient steps need far shorter steps than Newton steps
    const NewtonResult r = newton_cg(*p.model, *p.prior, Vec(p.model->parameter_size(), 0.0), cfg);
    const auto& rows = r.trace.rows;
    REQUIRE(rows.size() >= 2);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        CHECK(rows[i].cg_iters == 0);
        CHECK(rows[i].note == "preconditioned gradient step");
        CHECK(rows[i + 1].cost < rows[i].cost);
    }
    CHECK(r.trace.status == NewtonStatus::max_iter);

    cfg.max_backtracking_iter = 2;
    const NewtonResult f = newton_cg(*p.model, *p.prior, Vec(p.model->parameter_size(), 0.0), cfg);
    CHECK(f.trace.status == NewtonStatus::line_search_failed);
    CHECK_FALSE(f.converged());
    CHECK(norm2(f.m) == 0.0);
}

TEST_CASE("Newton and CG counts do not grow under refinement") {
    const Problem p16 = poisson(16), p32 = poisson(32);
    const NewtonResult a = newton_cg(*p16.model, *p16.prior, Vec(p16.model->parameter_size(), 0.0));
    const NewtonResult b = newton_cg(*p32.model, *p32.prior, Vec(p32.model->parameter_size(), 0.0));
    MESSAGE("16x16: " << a.iterations() << " Newton / " << a.total_cg_iterations() << " CG; 32x32: "
                      << b.iterations() << " / " << b.total_cg_iterations());
    CHECK(a.converged());
    CHECK(b.converged());
    CHECK(std::abs(static_cast<int>(a.iterations()) - static_cast<int>(b.iterations())) <= 3);
    const double ca = a.total_cg_iterations(), cb = b.total_cg_iterations();
    CHECK(std::abs(ca - cb) <= 0.5 * std::min(ca, cb));
}

TEST_CASE("trace CSV and configuration errors") {
    const Problem p = poisson(6);
    const NewtonResult r = newton_cg(*p.model, *p.prior, Vec(p.model->parameter_size(), 0.0));
    const auto path = std::filesystem::temp_directory_path() / "pdeinv_newton_trace.csv";
    r.trace.write_csv(path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "iter,cost,misfit,reg,gradnorm,cg_iters,alpha");
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    CHECK(lines == r.trace.rows.size());
    std::filesystem::remove(path);

    NewtonConfig bad;
    bad.hessian = HessianMode::misfit_only;
    CHECK_THROWS_AS(newton_cg(*p.model, *p.prior, Vec(p.model->parameter_size(), 0.0), bad), InvalidArgument);
    CHECK_THROWS_AS(newton_cg(*p.model, *p.prior, Vec(3, 0.0)), InvalidArgument);
}
