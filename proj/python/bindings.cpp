#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pdeinv/app/run.hpp"

namespace py = pybind11;
using namespace pdeinv;

namespace {

py::array_t<double> to_array(const Vec& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::array_t<double> to_array(const DenseMatrix& m) {
    py::array_t<double> a({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
    auto r = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
    return a;
}

Vec to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw InvalidArgument("expected a 1-d array");
    return Vec(a.data(), a.data() + a.size());
}

void check_size(const Vec& v, std::size_t n) {
    if (v.size() != n)
        throw InvalidArgument("array has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
}

// An experiment built from a config, with the model and prior kept alive.
class PyExperiment {
public:
    explicit PyExperiment(RunConfig cfg) : cfg_(std::move(cfg)), e_(build_experiment(cfg_)) {}

    std::size_t size() const { return e_.model->parameter_size(); }
    const RunConfig& config() const { return cfg_; }
    const Experiment& experiment() const { return e_; }

    py::dict cost(const py::array_t<double>& m) const {
        const Vec x = checked(m);
        const CostParts c = total_cost(*e_.model, *e_.prior, x);
        py::dict d;
        d["total"] = c.total;
        d["misfit"] = c.misfit;
        d["reg"] = c.reg;
        return d;
    }
    py::array_t<double> gradient(const py::array_t<double>& m) const {
        return to_array(pdeinv::gradient(*e_.model, *e_.prior, checked(m)));
    }
    py::array_t<double> hessian_apply(const py::array_t<double>& m, const py::array_t<double>& dir,
                                      const std::string& mode) const {
        return to_array(pdeinv::hessian_apply(*e_.model, *e_.prior, checked(m), checked(dir), parse_hessian_mode(mode)));
    }
    Vec checked(const py::array_t<double>& a) const {
        Vec v = to_vec(a);
        check_size(v, size());
        return v;
    }

private:
    RunConfig cfg_;
    Experiment e_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Deterministic and linearized Bayesian inversion for PDE models";

    // translators run in reverse order: the derived type must come last
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

    py::class_<RunConfig>(m, "RunConfig")
        .def_property_readonly("name", [](const RunConfig& c) { return c.name; })
        .def_property_readonly("problem", [](const RunConfig& c) { return std::string(to_string(c.problem)); })
        .def_property("output", [](const RunConfig& c) { return c.output; },
                      [](RunConfig& c, const std::filesystem::path& p) { c.output = p; })
        .def_property("mesh_n", [](const RunConfig& c) { return c.mesh_n; },
                      [](RunConfig& c, std::size_t n) { c.mesh_n = n; })
        .def_property_readonly("stage_plan", &RunConfig::stage_plan);

    m.def("parse_config", [](const std::string& text) { return parse_run_config(ConfigFile::parse(text, "<string>")); },
          py::arg("text"));
    m.def("load_config", &load_run_config, py::arg("path"));

    py::class_<PyExperiment>(m, "Experiment")
        .def(py::init<RunConfig>(), py::arg("config"))
        .def_property_readonly("size", &PyExperiment::size)
        .def_property_readonly("num_observations",
                               [](const PyExperiment& x) { return x.experiment().model->num_observations(); })
        .def_property_readonly("truth", [](const PyExperiment& x) { return to_array(x.experiment().truth); })
        .def_property_readonly("data", [](const PyExperiment& x) { return to_array(x.experiment().model->data()); })
        .def_property_readonly("dof_coords",
                               [](const PyExperiment& x) {
                                   const auto& pts = x.experiment().model->parameter_space().dof_coords();
                                   DenseMatrix c(pts.size(), 2);
                                   for (std::size_t i = 0; i < pts.size(); ++i) {
                                       c(i, 0) = pts[i].x;
                                       c(i, 1) = pts[i].y;
                                   }
                                   return to_array(c);
                               })
        .def("cost", &PyExperiment::cost, py::arg("m"))
        .def("gradient", &PyExperiment::gradient, py::arg("m"))
        .def("hessian_apply", &PyExperiment::hessian_apply, py::arg("m"), py::arg("direction"),
             py::arg("mode") = "full")
        .def("prior_sample", [](const PyExperiment& x, std::uint64_t seed) { return to_array(x.experiment().prior->sample(seed)); },
             py::arg("seed"))
        .def("apply_precision",
             [](const PyExperiment& x, const py::array_t<double>& v) {
                 const Vec in = x.checked(v);
                 Vec out(in.size());
                 x.experiment().prior->apply_precision(in, out);
                 return to_array(out);
             },
             py::arg("x"))
        .def("apply_covariance",
             [](const PyExperiment& x, const py::array_t<double>& v) {
                 const Vec in = x.checked(v);
                 Vec out(in.size());
                 x.experiment().prior->apply_covariance(in, out, true);
                 return to_array(out);
             },
             py::arg("x"))
        .def("prior_variance",
             [](const PyExperiment& x, std::size_t rbar, std::uint64_t seed) {
                 return to_array(x.experiment().prior->variance_randomized(rbar, seed).variance);
             },
             py::arg("rbar"), py::arg("seed") = 0)
        .def("verify",
             [](const PyExperiment& x, std::uint64_t seed) {
                 const Experiment& e = x.experiment();
                 const VerifyReport rep = verify_model(*e.model, *e.prior, 0.5 * e.truth, seed);
                 py::dict d;
                 d["passed"] = rep.passed();
                 d["gradient_min_error"] = rep.gradient_min_error;
                 d["hessian_symmetry"] = rep.hessian_symmetry;
                 d["hessian_fd_error"] = rep.hessian_fd_error;
                 d["failures"] = rep.failures;
                 return d;
             },
             py::arg("seed") = 11)
        .def("solve_map",
             [](const PyExperiment& x) {
                 const Experiment& e = x.experiment();
                 const NewtonResult r = newton_cg(*e.model, *e.prior, e.prior->mean(), x.config().newton);
                 py::dict d;
                 d["m"] = to_array(r.m);
                 d["converged"] = r.converged();
                 d["status"] = std::string(to_string(r.trace.status));
                 d["iterations"] = r.iterations();
                 d["cg_iterations"] = r.total_cg_iterations();
                 std::vector<double> cost, grad;
                 for (const auto& row : r.trace.rows) {
                     cost.push_back(row.cost);
                     grad.push_back(row.gradnorm);
                 }
                 d["cost"] = cost;
                 d["gradnorm"] = grad;
                 return d;
             })
        .def("posterior",
             [](const PyExperiment& x, const py::array_t<double>& m_map) {
                 const Experiment& e = x.experiment();
                 const RunConfig& c = x.config();
                 PosteriorConfig pc;
                 pc.ghep = {.r = c.eig_r, .l = c.eig_l, .seed = c.seeds.eigensolver, .threads = c.threads};
                 pc.solver = c.solver;
                 pc.lambda_cut = c.lambda_cut;
                 pc.gauss_newton = c.gauss_newton;
                 return LaplacePosterior(*e.model, *e.prior, x.checked(m_map), pc);
             },
             py::arg("m_map"), py::keep_alive<0, 1>());

    py::class_<LaplacePosterior>(m, "Posterior")
        .def_property_readonly("spectrum", [](const LaplacePosterior& p) { return to_array(p.spectrum()); })
        .def_property_readonly("rank", &LaplacePosterior::rank)
        .def_property_readonly("eigenvectors", [](const LaplacePosterior& p) { return to_array(p.v()); })
        .def_property_readonly("warnings", &LaplacePosterior::warnings)
        .def("apply_hinv", [](const LaplacePosterior& p, const py::array_t<double>& w) { return to_array(p.apply_hinv(to_vec(w))); },
             py::arg("w"))
        .def("sample", [](const LaplacePosterior& p, std::uint64_t seed) { return to_array(p.sample(seed)); },
             py::arg("seed"))
        .def("variance_correction", [](const LaplacePosterior& p) { return to_array(p.variance_correction()); })
        .def("variance", [](const LaplacePosterior& p, const py::array_t<double>& prior_var) {
                 return to_array(p.variance(to_vec(prior_var)));
             },
             py::arg("prior_variance"));

    m.def("run",
          [](const RunConfig& cfg, bool dry_run) {
              std::ostringstream log;
              const RunResult r = run_experiment(cfg, dry_run, log);
              py::dict d;
              d["exit_code"] = r.exit_code;
              d["failed_stage"] = r.failed_stage;
              d["message"] = r.message;
              d["artifacts"] = r.artifacts;
              d["log"] = log.str();
              return d;
          },
          py::arg("config"), py::arg("dry_run") = false);
    m.def("verify",
          [](bool quick) {
              std::ostringstream log;
              const VerifySuite s = run_verify(quick, false, log);
              py::list out;
              for (const auto& c : s.checks) {
                  py::dict d;
                  d["name"] = c.name;
                  d["passed"] = c.passed;
                  d["detail"] = c.detail;
                  out.append(d);
              }
              return out;
          },
          py::arg("quick") = true);
    m.def("fnv1a64", [](const py::bytes& b) { return fnv1a64(std::string(b)); }, py::arg("data"));
}
