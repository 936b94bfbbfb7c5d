#include <cmath>
#include <ostream>
#include <sstream>

#include "pdeinv/app/run.hpp"
#include "pdeinv/fem/assembly.hpp"
#include "pdeinv/linalg/krylov.hpp"
#include "pdeinv/random.hpp"

namespace pdeinv {

bool VerifySuite::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

namespace {

std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

RunConfig small_config(const std::string& problem, std::size_t n, bool quick) {
    std::string text = "problem = \"" + problem + "\"\n[mesh]\nn = " + std::to_string(n) + "\n";
    if (problem == "advdiff") text += "[advdiff]\nsteps = " + std::string(quick ? "20" : "40") + "\n";
    return parse_run_config(ConfigFile::parse(text, "<verify>"));
}

VerifyCheck derivative_check(const std::string& name, const Experiment& e, bool flip) {
    const auto model = flip ? make_sign_flipped_adjoint(e.model) : e.model;
    // a point away from the prior mean so that the Hessian is not trivial
    const Vec m0 = 0.5 * e.truth;
    const VerifyReport rep = verify_model(*model, *e.prior, m0, 11);
    VerifyCheck c{name, rep.passed(), ""};
    std::ostringstream os;
    os << "gradient FD min error " << sci(rep.gradient_min_error) << " (eps sweep:";
    for (const auto& p : rep.gradient_sweep) os << ' ' << sci(p.eps) << ':' << sci(p.error);
    os << "), Hessian symmetry " << sci(rep.hessian_symmetry) << ", Hessian FD " << sci(rep.hessian_fd_error);
    for (const auto& f : rep.failures) os << "; " << f;
    c.detail = os.str();
    return c;
}

}  // namespace

VerifySuite run_verify(bool quick, bool inject_adjoint_bug, std::ostream& log) {
    VerifySuite suite;
    auto record = [&](VerifyCheck c) {
        log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        suite.checks.push_back(std::move(c));
    };
    auto guarded = [&](const std::string& name, auto&& fn) {
        try {
            record(fn());
        } catch (const std::exception& ex) {
            record({name, false, std::string("exception: ") + ex.what()});
        }
    };
    const std::size_t n = quick ? 8 : 16;

    guarded("poisson.derivatives", [&] {
        return derivative_check("poisson.derivatives", build_experiment(small_config("poisson", n, quick)),
                                inject_adjoint_bug);
    });
    guarded("advdiff.derivatives", [&] {
        const Experiment e = build_experiment(small_config("advdiff", n, quick));
        return derivative_check("advdiff.derivatives", e, inject_adjoint_bug);
    });
    guarded("advdiff.adjoint_transpose", [&] {
        const Experiment e = build_experiment(small_config("advdiff", 8, true));
        RandomStream rng(5);
        double worst = 0;
        for (int k = 0; k < 3; ++k) {
            const Vec m = rng.normal_vector(e.advdiff->parameter_size());
            const Vec w = rng.normal_vector(e.advdiff->num_observations());
            const double lhs = dot(e.advdiff->observe(e.advdiff->solve_forward(m)), w);
            const double rhs = dot(m, e.advdiff->apply_adjoint_map(w));
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
        }
        return VerifyCheck{"advdiff.adjoint_transpose", worst < 1e-10, "max relative defect " + sci(worst)};
    });

    const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(n, n));
    const auto space = std::make_shared<const FnSpace>(mesh, 1);
    const CsrMatrix mass = assemble_mass(*space);
    const EllipticForm form{.gamma = 0.1, .theta = anisotropic_tensor(M_PI / 4, 2.0, 0.5), .delta = 0.5, .beta = 0.2};

    guarded("fem.rect_factor", [&] {
        const CsrMatrix cm = rect_factor_mass(*space), ca = rect_factor_elliptic(*space, form);
        const double em = relative_difference(cm.times_transpose(cm), mass);
        const double ea = relative_difference(ca.times_transpose(ca), assemble_elliptic(*space, form));
        return VerifyCheck{"fem.rect_factor", std::max(em, ea) < 1e-12,
                           "mass " + sci(em) + ", elliptic " + sci(ea)};
    });
    guarded("fem.mass_area", [&] {
        const Vec ones(space->size(), 1.0);
        const double area = dot(ones, mass.multiply(ones));
        return VerifyCheck{"fem.mass_area", std::abs(area - 1) < 1e-12, "1^T M 1 = " + sci(area)};
    });
    guarded("linalg.spd_solve", [&] {
        auto a = std::make_shared<const CsrMatrix>(assemble_elliptic(*space, form));
        const Vec b = RandomStream(7).normal_vector(a->rows());
        const Vec x = SpdSolver(a, 1e-12).solve(b);
        const double res = norm2(a->multiply(x) - b) / norm2(b);
        return VerifyCheck{"linalg.spd_solve", res < 1e-10, "relative residual " + sci(res)};
    });
    guarded("linalg.banded_lu", [&] {
        std::vector<Point> vel(mesh->num_triangles(), Point{1.0, -0.5});
        const CsrMatrix a = assemble_elliptic(*space, form).add(1.0, assemble_advection(*space, vel), 1.0);
        const BandedLu lu(a);
        const Vec b = RandomStream(8).normal_vector(a.rows());
        const double r1 = norm2(a.multiply(lu.solve(b)) - b) / norm2(b);
        const double r2 = norm2(a.multiply_transpose(lu.solve_transpose(b)) - b) / norm2(b);
        return VerifyCheck{"linalg.banded_lu", std::max(r1, r2) < 1e-10,
                           "residuals " + sci(r1) + " (A), " + sci(r2) + " (A^T)"};
    });
    guarded("randeig.geometric_spectrum", [&] {
        const std::size_t dim = 40, r = 10, l = 20;
        Vec d(dim);
        for (std::size_t i = 0; i < dim; ++i) d[i] = std::pow(0.5, static_cast<double>(i));
        const LinearOp a(dim, [d](std::span<const double> x, std::span<double> y) {
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = d[i] * x[i];
        }, true);
        const LinearOp id = LinearOp::identity(dim);
        auto ca = make_counter(), cs = make_counter();
        const GhepConfig gc{.r = r, .l = l, .seed = 3};
        const GhepResult g2 = double_pass(counted(a, ca), id, id, gc);
        const GhepResult g1 = single_pass(counted(a, cs), id, id, gc);
        double err = 0;
        for (std::size_t i = 0; i < r; ++i) err = std::max(err, std::abs(g2.lambda[i] - d[i]) / d[i]);
        const bool ok = err < 1e-6 && *ca == 2 * (r + l) && *cs == r + l;
        return VerifyCheck{"randeig.geometric_spectrum", ok,
                           "double-pass max relative error " + sci(err) + ", applies " + std::to_string(*ca) + "/" +
                               std::to_string(*cs)};
    });
    guarded("prior.covariance_inverse", [&] {
        const BiLaplacianPrior prior(space, {.gamma = 0.1, .delta = 0.5, .theta = anisotropic_tensor(M_PI / 4, 2.0, 0.5)});
        const Vec x = RandomStream(9).normal_vector(space->size());
        Vec rx(x.size()), crx(x.size());
        prior.apply_precision(x, rx);
        prior.apply_covariance(rx, crx, true);
        const double err = norm2(crx - x) / norm2(x);
        return VerifyCheck{"prior.covariance_inverse", err < 1e-8, "||C R x - x|| / ||x|| = " + sci(err)};
    });
    return suite;
}

}  // namespace pdeinv
