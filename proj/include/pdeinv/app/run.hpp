#pragma once

// Experiment driver behind the command line: setup, the stage pipeline,
// artifact files with a hashed MANIFEST, window spectra and the verification
// suite.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pdeinv/app/config.hpp"

namespace pdeinv {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_solver = 2, exit_acceptance = 3 };

struct Experiment {
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<PoissonModel> poisson;
    std::shared_ptr<AdvDiffModel> advdiff;
    std::shared_ptr<InverseModel> model;  // whichever of the two is set
    std::shared_ptr<BiLaplacianPrior> prior;
    std::vector<Point> obs_points;
    Vec truth;
};

/// Mesh, observation points (seed.obs_points), model, prior and synthetic
/// data (seed.noise).
Experiment build_experiment(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

/// `status <text>` then one `fnv1a64 <hex> <bytes> <name>` line per artifact.
void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& artifacts,
                    const std::string& status);

struct RunResult {
    int exit_code = exit_ok;
    std::string failed_stage;
    std::string message;
    std::vector<std::string> artifacts;  // relative to the output directory
};

RunResult run_experiment(const RunConfig& cfg, bool dry_run, std::ostream& log);

struct WindowSpectrum {
    double t1 = 0, t2 = 0;
    std::size_t observations = 0;
    Vec lambda;
    std::string file;  // relative to <output>/spectrum
};

/// advdiff only: misfit-Hessian spectra for each observation window with one
/// shared sketch, one CSV per window under <output>/spectrum.
std::vector<WindowSpectrum> run_spectrum(const RunConfig& cfg, const std::vector<std::pair<double, double>>& windows,
                                         std::ostream& log);

struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifySuite {
    std::vector<VerifyCheck> checks;
    [[nodiscard]] bool passed() const;
};

/// Derivative checks of both models plus small linear-algebra, FE and
/// eigensolver property checks. `inject_adjoint_bug` flips the adjoint sign.
VerifySuite run_verify(bool quick, bool inject_adjoint_bug, std::ostream& log);

}  // namespace pdeinv
