#include "pdeinv/app/run.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pdeinv/fem/io.hpp"
#include "pdeinv/random.hpp"

namespace pdeinv {

namespace fs = std::filesystem;

Experiment build_experiment(const RunConfig& cfg) {
    Experiment e;
    e.mesh = std::make_shared<const Mesh>(build_unit_square_mesh(cfg.mesh_n, cfg.mesh_n, cfg.holes));
    e.obs_points = random_points(*e.mesh, cfg.obs_window, cfg.obs_count, cfg.seeds.obs_points);
    if (cfg.problem == ProblemKind::poisson) {
        e.poisson = std::make_shared<PoissonModel>(e.mesh, cfg.poisson, e.obs_points);
        e.model = e.poisson;
        e.prior = std::make_shared<BiLaplacianPrior>(e.poisson->parameter_space_ptr(), cfg.prior);
        e.truth = e.poisson->parameter_space().interpolate(poisson_true_parameter);
    } else {
        auto vel = cfg.velocity_file.empty() ? default_velocity(*e.mesh) : read_velocity(cfg.velocity_file, *e.mesh);
        e.advdiff = std::make_shared<AdvDiffModel>(e.mesh, cfg.advdiff, std::move(vel), e.obs_points);
        e.model = e.advdiff;
        e.prior = std::make_shared<BiLaplacianPrior>(e.advdiff->parameter_space_ptr(), cfg.prior);
        e.truth = e.advdiff->parameter_space().interpolate(advdiff_true_parameter);
    }
    e.model->set_data(make_synthetic_data(*e.model, e.truth, cfg.noise_sigma, cfg.seeds.noise));
    return e;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

void write_manifest(const fs::path& dir, const std::vector<std::string>& artifacts, const std::string& status) {
    std::ofstream out(dir / "MANIFEST", std::ios::binary);
    out << "status " << status << '\n';
    for (const auto& name : artifacts) {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64_file(dir / name)));
        out << "fnv1a64 " << hex << ' ' << fs::file_size(dir / name) << ' ' << name << '\n';
    }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

class StageFailure : public std::runtime_error {
public:
    StageFailure(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
    int code;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
}

void write_observations(const fs::path& path, const Experiment& e) {
    std::ofstream out(path, std::ios::binary);
    const Vec& d = e.model->data();
    const std::size_t q = e.obs_points.size();
    if (e.advdiff) {
        out << "index,t,x,y,value\n";
        const auto& nodes = e.advdiff->obs_nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (std::size_t j = 0; j < q; ++j)
                out << i * q + j << ',' << format_double(static_cast<double>(nodes[i]) * e.advdiff->dt()) << ','
                    << format_double(e.obs_points[j].x) << ',' << format_double(e.obs_points[j].y) << ','
                    << format_double(d[i * q + j]) << '\n';
    } else {
        out << "index,x,y,value\n";
        for (std::size_t j = 0; j < q; ++j)
            out << j << ',' << format_double(e.obs_points[j].x) << ',' << format_double(e.obs_points[j].y) << ','
                << format_double(d[j]) << '\n';
    }
}

void write_columns(const fs::path& path, const FnSpace& space, const std::vector<Vec>& cols) {
    std::vector<std::span<const double>> spans(cols.begin(), cols.end());
    write_field(path, space.dof_coords(), spans);
}

std::uint64_t prior_sample_seed(const RunConfig& cfg, std::size_t i) {
    return derive_seed(derive_seed(cfg.seeds.prior, 0), i);
}
std::uint64_t posterior_sample_seed(const RunConfig& cfg, std::size_t i) {
    return derive_seed(derive_seed(cfg.seeds.prior, 1), i);
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, bool dry_run, std::ostream& log) {
    RunResult res;
    const auto plan = cfg.stage_plan();

    // dimensions, without any PDE solves
    const Mesh mesh = build_unit_square_mesh(cfg.mesh_n, cfg.mesh_n, cfg.holes);
    const std::size_t n = mesh.vertices().size();
    if (cfg.stages.eigens && cfg.eig_r + cfg.eig_l > n) {
        res.exit_code = exit_validation;
        res.message = "eigen.r + eigen.l = " + std::to_string(cfg.eig_r + cfg.eig_l) +
                      " exceeds the parameter dimension " + std::to_string(n);
        return res;
    }
    if (dry_run) {
        log << "problem " << to_string(cfg.problem) << ", mesh " << cfg.mesh_n << "x" << cfg.mesh_n << " ("
            << mesh.num_triangles() << " triangles, " << n << " parameter dofs), " << cfg.obs_count
            << " observation points\n";
        log << "output " << cfg.output.string() << '\n';
        log << "stages:";
        for (const auto& s : plan) log << ' ' << s;
        log << '\n';
        return res;
    }

    fs::create_directories(cfg.output);
    const fs::path dir = cfg.output;
    nlohmann::ordered_json summary;
    summary["name"] = cfg.name;
    summary["problem"] = std::string(to_string(cfg.problem));
    summary["mesh"] = cfg.mesh_n;
    summary["threads"] = cfg.threads;
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    auto add = [&](const std::string& name) { res.artifacts.push_back(name); };

    std::string stage = "setup";
    Experiment e;
    Vec m_map;
    std::unique_ptr<LaplacePosterior> post;
    const auto t_run = Clock::now();
    try {
        auto t0 = Clock::now();
        write_text(dir / "config.toml", cfg.config_text);
        add("config.toml");
        e = build_experiment(cfg);
        const FnSpace& space = e.model->parameter_space();
        write_mesh(dir / "mesh.txt", *e.mesh);
        add("mesh.txt");
        write_observations(dir / "observations.csv", e);
        add("observations.csv");
        write_field(dir / "truth.txt", space.dof_coords(), e.truth);
        add("truth.txt");
        if (e.advdiff) {
            write_velocity(dir / "velocity.txt", *e.mesh, e.advdiff->velocity());
            add("velocity.txt");
        }
        summary["parameter_dofs"] = space.size();
        summary["observations"] = e.model->num_observations();
        timings[stage] = seconds_since(t0);
        log << "[setup] " << space.size() << " parameter dofs, " << e.model->num_observations() << " observations\n";

        if (cfg.stages.sample_prior) {
            stage = "sample-prior";
            t0 = Clock::now();
            std::vector<Vec> samples;
            for (std::size_t i = 0; i < cfg.prior_samples; ++i)
                samples.push_back(e.prior->sample(prior_sample_seed(cfg, i)));
            write_columns(dir / "prior_samples.txt", space, samples);
            add("prior_samples.txt");
            timings[stage] = seconds_since(t0);
            log << "[sample-prior] " << samples.size() << " samples\n";
        }

        if (cfg.stages.map) {
            stage = "map";
            t0 = Clock::now();
            const NewtonResult nr = newton_cg(*e.model, *e.prior, e.prior->mean(), cfg.newton);
            m_map = nr.m;
            nr.trace.write_csv(dir / "newton_trace.csv");
            add("newton_trace.csv");
            write_columns(dir / "map.txt", space, {m_map, e.truth});
            add("map.txt");
            summary["newton"] = {{"status", std::string(to_string(nr.trace.status))},
                                 {"iterations", nr.iterations()},
                                 {"cg_iterations", nr.total_cg_iterations()},
                                 {"final_gradnorm", nr.trace.rows.back().gradnorm},
                                 {"final_cost", nr.trace.rows.back().cost}};
            timings[stage] = seconds_since(t0);
            log << "[map] " << to_string(nr.trace.status) << " after " << nr.iterations() << " Newton / "
                << nr.total_cg_iterations() << " CG iterations\n";
            if (!nr.converged())
                throw StageFailure(exit_solver, std::string("Newton-CG did not converge (") +
                                                    std::string(to_string(nr.trace.status)) + ")");
        }

        if (cfg.stages.eigens) {
            stage = "eigens";
            t0 = Clock::now();
            PosteriorConfig pc;
            pc.ghep = {.r = cfg.eig_r, .l = cfg.eig_l, .seed = cfg.seeds.eigensolver, .threads = cfg.threads};
            pc.solver = cfg.solver;
            pc.lambda_cut = cfg.lambda_cut;
            pc.gauss_newton = cfg.gauss_newton;
            post = std::make_unique<LaplacePosterior>(*e.model, *e.prior, m_map, pc);
            write_eigenvalues_csv(dir / "eigenvalues.csv", post->spectrum());
            add("eigenvalues.csv");
            std::vector<Vec> modes;
            for (std::size_t i = 0; i < std::min<std::size_t>(post->rank(), 8); ++i) modes.push_back(post->v().column(i));
            if (!modes.empty()) {
                write_columns(dir / "eigenvectors.txt", space, modes);
                add("eigenvectors.txt");
            }
            std::size_t above_one = 0;
            for (double l : post->spectrum()) above_one += l > 1;
            summary["eigen"] = {{"solver", std::string(to_string(cfg.solver))},
                                {"r", cfg.eig_r},
                                {"l", cfg.eig_l},
                                {"kept", post->rank()},
                                {"above_one", above_one},
                                {"lambda_max", post->spectrum().front()},
                                {"hessian_applies", post->ghep().a_applies},
                                {"eigen_residual", post->eigen_residual()},
                                {"warnings", post->warnings()}};
            timings[stage] = seconds_since(t0);
            for (const auto& w : post->warnings()) log << "[eigens] warning: " << w << '\n';
            log << "[eigens] kept " << post->rank() << " of " << cfg.eig_r << " (lambda > " << cfg.lambda_cut
                << "), " << above_one << " above 1\n";
        }

        if (cfg.stages.variance) {
            stage = "variance";
            t0 = Clock::now();
            const std::size_t rbar = std::min(cfg.rbar, space.size());
            const RandomizedVariance pv =
                e.prior->variance_randomized(rbar, derive_seed(cfg.seeds.eigensolver, 1), cfg.threads);
            const Vec post_var = post->variance(pv.variance);
            write_columns(dir / "variance.txt", space, {pv.variance, post_var});
            add("variance.txt");
            double mp = 0, mq = 0;
            for (std::size_t i = 0; i < post_var.size(); ++i) {
                mp += pv.variance[i] / static_cast<double>(post_var.size());
                mq += post_var[i] / static_cast<double>(post_var.size());
            }
            summary["variance"] = {{"rbar", rbar}, {"mean_prior", mp}, {"mean_posterior", mq}};
            timings[stage] = seconds_since(t0);
            log << "[variance] mean prior " << mp << ", posterior " << mq << '\n';
        }

        if (cfg.stages.sample_posterior) {
            stage = "sample-posterior";
            t0 = Clock::now();
            std::vector<Vec> samples;
            for (std::size_t i = 0; i < cfg.posterior_samples; ++i)
                samples.push_back(post->sample(posterior_sample_seed(cfg, i)));
            write_columns(dir / "posterior_samples.txt", space, samples);
            add("posterior_samples.txt");
            timings[stage] = seconds_since(t0);
            log << "[sample-posterior] " << samples.size() << " samples\n";
        }
        stage.clear();
    } catch (const StageFailure& ex) {
        res.exit_code = ex.code;
        res.message = ex.what();
    } catch (const InvalidArgument& ex) {
        res.exit_code = exit_validation;
        res.message = ex.what();
    } catch (const std::exception& ex) {
        res.exit_code = exit_solver;
        res.message = ex.what();
    }
    timings["total"] = seconds_since(t_run);
    summary["timings_s"] = timings;
    if (e.model) {
        const SolveCounters& c = e.model->counters();
        summary["pde_solves"] = {{"forward", c.forward.load()},
                                 {"adjoint", c.adjoint.load()},
                                 {"incremental_forward", c.incremental_forward.load()},
                                 {"incremental_adjoint", c.incremental_adjoint.load()}};
    }
    std::string status = "complete";
    if (res.exit_code != exit_ok) {
        res.failed_stage = stage;
        status = "incomplete: stage " + stage + " failed: " + res.message;
        summary["failed_stage"] = stage;
        summary["error"] = res.message;
        log << "[" << stage << "] failed: " << res.message << '\n';
    }
    summary["status"] = res.exit_code == exit_ok ? "complete" : "incomplete";
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    add("summary.json");
    write_manifest(dir, res.artifacts, status);
    return res;
}

std::vector<WindowSpectrum> run_spectrum(const RunConfig& cfg, const std::vector<std::pair<double, double>>& windows,
                                         std::ostream& log) {
    if (cfg.problem != ProblemKind::advdiff) throw InvalidArgument("spectrum: only the advdiff problem has time windows");
    if (windows.empty()) throw InvalidArgument("spectrum: at least one window is required");
    const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(cfg.mesh_n, cfg.mesh_n, cfg.holes));
    const auto pts = random_points(*mesh, cfg.obs_window, cfg.obs_count, cfg.seeds.obs_points);
    const auto vel = cfg.velocity_file.empty() ? default_velocity(*mesh) : read_velocity(cfg.velocity_file, *mesh);
    const fs::path dir = cfg.output / "spectrum";
    fs::create_directories(dir);
    std::vector<WindowSpectrum> out;
    std::vector<std::string> files;
    DenseMatrix omega;
    for (const auto& [t1, t2] : windows) {
        AdvDiffConfig ac = cfg.advdiff;
        ac.obs_start = t1;
        ac.obs_end = t2;
        const AdvDiffModel model(mesh, ac, vel, pts);
        const BiLaplacianPrior prior(model.parameter_space_ptr(), cfg.prior);
        const std::size_t n = model.parameter_size();
        if (cfg.eig_r + cfg.eig_l > n) throw InvalidArgument("spectrum: eigen.r + eigen.l exceeds the parameter dimension");
        if (omega.cols() == 0) omega = sketch_matrix(n, cfg.eig_r + cfg.eig_l, cfg.seeds.eigensolver);
        SolveContext ctx(model, prior);
        ctx.set_parameter(Vec(n, 0.0));
        const LinearOp a = ctx.misfit_hessian_op(true);
        const GhepResult g = cfg.solver == GhepSolver::double_pass
                                 ? double_pass(a, prior.precision_op(), prior.covariance_op(true), omega, cfg.eig_r, cfg.threads)
                                 : single_pass(a, prior.precision_op(), prior.covariance_op(true), omega, cfg.eig_r, cfg.threads);
        WindowSpectrum w;
        w.t1 = t1;
        w.t2 = t2;
        w.observations = model.num_observations();
        w.lambda = g.lambda;
        w.file = "spectrum_" + format_double(t1) + "_" + format_double(t2) + ".csv";
        write_eigenvalues_csv(dir / w.file, w.lambda);
        files.push_back(w.file);
        log << "[spectrum] window [" << t1 << ", " << t2 << "]: " << w.observations << " observations, lambda_1 = "
            << w.lambda.front() << ", lambda_" << w.lambda.size() << " = " << w.lambda.back() << '\n';
        out.push_back(std::move(w));
    }
    write_manifest(dir, files, "complete");
    return out;
}

}  // namespace pdeinv
