#pragma once

// Abstract PDE-constrained inverse problem: forward, adjoint and incremental
// solves, and the pieces of the misfit gradient and Hessian action. The
// reduced cost, gradient and Hessian are assembled generically on top.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdeinv/fem/space.hpp"
#include "pdeinv/linalg/linear_op.hpp"
#include "pdeinv/prior.hpp"

namespace pdeinv {

/// Model-specific data tied to one parameter value (factorizations, e^m at
/// quadrature points, ...).
struct ModelCache {
    virtual ~ModelCache() = default;
};

/// A state or adjoint: one vector for stationary problems, one per time node
/// for time-dependent ones.
struct State {
    std::vector<Vec> fields;
    std::shared_ptr<const ModelCache> cache;
};

enum class HessianMode { full, misfit_only, gauss_newton };

std::string_view to_string(HessianMode mode);
HessianMode parse_hessian_mode(std::string_view text);

/// Counts of PDE solves, shared by copies of a model.
struct SolveCounters {
    std::atomic<std::size_t> forward{0}, adjoint{0}, incremental_forward{0}, incremental_adjoint{0};
    [[nodiscard]] std::size_t total() const { return forward + adjoint + incremental_forward + incremental_adjoint; }
};

class InverseModel {
public:
    virtual ~InverseModel() = default;

    [[nodiscard]] virtual const FnSpace& parameter_space() const = 0;
    [[nodiscard]] std::size_t parameter_size() const { return parameter_space().size(); }

    [[nodiscard]] virtual State solve_forward(std::span<const double> m) const = 0;
    /// Predicted observations B u (length num_observations()).
    [[nodiscard]] virtual Vec observe(const State& u) const = 0;
    [[nodiscard]] virtual State solve_adjoint(const State& u, std::span<const double> m) const = 0;
    [[nodiscard]] virtual Vec misfit_gradient(const State& u, const State& p, std::span<const double> m) const = 0;
    [[nodiscard]] virtual State incremental_forward(const State& u, std::span<const double> m,
                                                    std::span<const double> mhat) const = 0;
    [[nodiscard]] virtual State incremental_adjoint(const State& u, const State& p, std::span<const double> m,
                                                    std::span<const double> mhat, const State& uhat,
                                                    bool gauss_newton) const = 0;
    /// Misfit Hessian action assembled from the state, adjoint and incremental fields.
    [[nodiscard]] virtual Vec hessian_terms(const State& u, const State& p, const State& uhat, const State& phat,
                                            std::span<const double> m, std::span<const double> mhat,
                                            bool gauss_newton) const = 0;

    [[nodiscard]] virtual const Vec& data() const = 0;
    virtual void set_data(Vec d) = 0;
    [[nodiscard]] virtual double noise_variance() const = 0;
    [[nodiscard]] std::size_t num_observations() const { return data().size(); }

    /// 1/2 sigma^-2 ||B u - d||^2
    [[nodiscard]] double misfit_cost(const State& u) const;

    [[nodiscard]] SolveCounters& counters() const { return *counters_; }

protected:
    std::shared_ptr<SolveCounters> counters_ = std::make_shared<SolveCounters>();
};

struct CostParts {
    double total = 0, misfit = 0, reg = 0;
};

/// Caches (u, p) for one parameter value so that repeated Hessian applies
/// reuse them. Changing the parameter invalidates the cache. Single owner.
class SolveContext {
public:
    SolveContext(const InverseModel& model, const BiLaplacianPrior& prior);

    void set_parameter(std::span<const double> m);
    [[nodiscard]] const Vec& parameter() const { return m_; }

    [[nodiscard]] CostParts cost();
    [[nodiscard]] Vec gradient();
    /// Hessian action; full and gauss_newton modes include the prior term R mhat.
    [[nodiscard]] Vec hessian_apply(std::span<const double> mhat, HessianMode mode);
    /// Thread-safe operator view of hessian_apply at the current parameter.
    [[nodiscard]] LinearOp hessian_op(HessianMode mode);
    /// Misfit part only, full or Gauss-Newton.
    [[nodiscard]] LinearOp misfit_hessian_op(bool gauss_newton);

    [[nodiscard]] const State& state();
    [[nodiscard]] const State& adjoint();

private:
    LinearOp make_op(bool gauss_newton, bool with_prior);

    const InverseModel* model_;
    const BiLaplacianPrior* prior_;
    Vec m_;
    std::optional<State> u_, p_;
};

CostParts total_cost(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m);
Vec gradient(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m);
Vec hessian_apply(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m,
                  std::span<const double> mhat, HessianMode mode);

struct FdPoint {
    double eps;
    double error;
};

struct VerifyReport {
    std::vector<FdPoint> gradient_sweep;  // relative error of <g, mhat> vs central differences
    double gradient_min_error = 0;
    double hessian_symmetry = 0;  // |<H a, b> - <a, H b>| / (||H a|| ||b||), worst probe
    double hessian_fd_error = 0;  // ||H mhat - (g+ - g-)/(2 eps)|| / ||H mhat|| at eps = 1e-5
    double gn_min_curvature = 0;  // min <H_gn x, x> / ||x||^2 over probes
    std::vector<std::string> failures;
    [[nodiscard]] bool passed() const { return failures.empty(); }
    [[nodiscard]] std::string text() const;
    void write_csv(const std::filesystem::path& path) const;
};

struct VerifyTolerances {
    double gradient = 1e-5;
    double symmetry = 1e-8;
    double hessian_fd = 1e-4;
};

/// Finite-difference gradient sweep (eps = 1e-3 ... 1e-8), Hessian symmetry
/// and FD checks at m0. Never throws; problems become report entries.
VerifyReport verify_model(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m0,
                          std::uint64_t seed, const VerifyTolerances& tol = {});

/// observe(solve_forward(m_true)) plus noise_std * N(0, I) noise.
Vec make_synthetic_data(const InverseModel& model, std::span<const double> m_true, double noise_std,
                        std::uint64_t seed);

/// Wraps a model and negates its adjoint solution (negative control for the
/// verification suite).
std::shared_ptr<InverseModel> make_sign_flipped_adjoint(std::shared_ptr<InverseModel> model);

}  // namespace pdeinv
