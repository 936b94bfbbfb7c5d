#pragma once

// Inexact Newton-CG for the MAP point: Eisenstat-Walker forcing, CG
// preconditioned by the prior covariance with Steihaug termination, Armijo
// backtracking.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pdeinv/model.hpp"

namespace pdeinv {

struct NewtonConfig {
    std::size_t max_iter = 50;
    std::size_t max_backtracking_iter = 10;
    double grad_tol = 1e-9;      // absolute
    double rel_grad_tol = 1e-6;  // relative to ||g_0||
    double c_armijo = 1e-4;
    double eta_max = 0.5;
    HessianMode hessian = HessianMode::full;
    std::size_t cg_max_iter = 500;
    bool record_steps = false;  // keep each search direction in the trace
};

enum class NewtonStatus { converged, max_iter, line_search_failed };
std::string_view to_string(NewtonStatus s);

struct NewtonIteration {
    std::size_t iter = 0;
    double cost = 0, misfit = 0, reg = 0;
    double gradnorm = 0;
    std::size_t cg_iters = 0;
    double alpha = 0;          // accepted step; 0 on the last row
    double eta = 0;            // forcing term used for this step
    double cg_residual = 0;    // ||H mhat + g|| reported by CG
    std::string cg_reason;
    std::string note;          // e.g. direction replaced
    Vec step;                  // only with record_steps
};

struct NewtonTrace {
    std::vector<NewtonIteration> rows;
    NewtonStatus status = NewtonStatus::max_iter;
    /// iter,cost,misfit,reg,gradnorm,cg_iters,alpha
    void write_csv(const std::filesystem::path& path) const;
};

struct NewtonResult {
    Vec m;
    NewtonTrace trace;
    [[nodiscard]] bool converged() const { return trace.status == NewtonStatus::converged; }
    [[nodiscard]] std::size_t iterations() const { return trace.rows.empty() ? 0 : trace.rows.size() - 1; }
    [[nodiscard]] std::size_t total_cg_iterations() const;
};

NewtonResult newton_cg(const InverseModel& model, const BiLaplacianPrior& prior, std::span<const double> m0,
                       const NewtonConfig& cfg = {});

struct LineSearchResult {
    Vec m;
    double alpha = 0;
    double cost = 0;
    std::size_t evaluations = 0;
    bool success = false;
    bool direction_replaced = false;
};

/// Backtracking alpha = 2^-j, j = 0..max_backtracking_iter, until
/// cost(m + alpha d) < cost0 + alpha c g^T d. A non-descent direction is
/// replaced by fallback() when given, otherwise rejected. On failure m is the
/// unchanged start point.
LineSearchResult armijo_linesearch(const std::function<double(std::span<const double>)>& cost,
                                   std::span<const double> m, std::span<const double> direction,
                                   std::span<const double> g, double cost0, const NewtonConfig& cfg,
                                   const std::function<Vec()>& fallback = {});

}  // namespace pdeinv
