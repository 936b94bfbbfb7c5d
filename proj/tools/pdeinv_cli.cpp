// pdeinv command line: verify, run, spectrum.

#include <algorithm>
#include <iostream>

#include "CLI11.hpp"
#include "pdeinv/app/run.hpp"

using namespace pdeinv;

namespace {

int cmd_verify(bool quick, bool inject) {
    const VerifySuite suite = run_verify(quick, inject, std::cout);
    const auto failed = std::count_if(suite.checks.begin(), suite.checks.end(), [](const auto& c) { return !c.passed; });
    std::cout << (failed == 0 ? "verify: all " : "verify: ") << (failed == 0 ? suite.checks.size() : failed)
              << (failed == 0 ? " checks passed\n" : " check(s) failed\n");
    return failed == 0 ? exit_ok : exit_acceptance;
}

int cmd_run(const std::string& path, bool dry_run) {
    const RunConfig cfg = load_run_config(path);
    const RunResult res = run_experiment(cfg, dry_run, std::cout);
    if (res.exit_code != exit_ok) {
        std::cerr << "error: " << (res.failed_stage.empty() ? "" : "stage " + res.failed_stage + ": ") << res.message
                  << '\n';
        return res.exit_code;
    }
    if (!dry_run) std::cout << "wrote " << res.artifacts.size() << " artifacts to " << cfg.output.string() << '\n';
    return exit_ok;
}

// Nested windows (same end, later start) should give pointwise smaller spectra.
void report_ordering(const std::vector<WindowSpectrum>& spectra) {
    for (std::size_t a = 0; a < spectra.size(); ++a)
        for (std::size_t b = 0; b < spectra.size(); ++b) {
            const auto& inner = spectra[a];
            const auto& outer = spectra[b];
            if (a == b || !(inner.t1 >= outer.t1 && inner.t2 <= outer.t2)) continue;
            std::size_t violations = 0;
            for (std::size_t i = 0; i < std::min(inner.lambda.size(), outer.lambda.size()); ++i)
                violations += inner.lambda[i] > outer.lambda[i] * (1 + 1e-8);
            std::cout << "ordering [" << inner.t1 << ", " << inner.t2 << "] <= [" << outer.t1 << ", " << outer.t2
                      << "]: " << (violations == 0 ? "holds" : std::to_string(violations) + " violations") << '\n';
        }
}

int cmd_spectrum(const std::string& path, const std::vector<std::string>& windows) {
    const RunConfig cfg = load_run_config(path);
    std::vector<std::pair<double, double>> w;
    for (const auto& s : windows) w.push_back(parse_window(s));
    const auto spectra = run_spectrum(cfg, w, std::cout);
    report_ordering(spectra);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic and Bayesian PDE-constrained inversion"};
    app.require_subcommand(1);

    bool quick = false, inject = false;
    auto* verify = app.add_subcommand("verify", "finite-difference and property checks");
    verify->add_flag("--quick", quick, "smaller meshes");
    verify->add_flag("--inject-adjoint-bug", inject, "flip the adjoint sign (negative control)");

    std::string run_path;
    bool dry_run = false;
    auto* run = app.add_subcommand("run", "run the stages of a config");
    run->add_option("config", run_path, "config file")->required();
    run->add_flag("--dry-run", dry_run, "validate and print the stage plan");

    std::string spec_path;
    std::vector<std::string> windows;
    auto* spectrum = app.add_subcommand("spectrum", "misfit-Hessian spectra per observation window");
    spectrum->add_option("config", spec_path, "config file")->required();
    spectrum->add_option("--windows", windows, "windows as a:b")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*verify) return cmd_verify(quick, inject);
        if (*run) return cmd_run(run_path, dry_run);
        return cmd_spectrum(spec_path, windows);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_solver;
    }
}
