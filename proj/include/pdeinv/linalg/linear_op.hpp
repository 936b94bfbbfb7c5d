#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>

#include "pdeinv/linalg/dense.hpp"
#include "pdeinv/linalg/sparse.hpp"
#include "pdeinv/linalg/vector.hpp"

namespace pdeinv {

/// Square matrix-free operator y := Op x.
///
/// `symmetric` states that <Op x, y> = <x, Op y>; `pure` states that apply
/// has no observable side effects, which allows the randomized eigensolvers
/// to apply it to several columns concurrently.
class LinearOp {
public:
    using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

    LinearOp() = default;
    LinearOp(std::size_t n, ApplyFn apply, bool symmetric = false, bool pure = true)
        : n_(n), apply_(std::move(apply)), symmetric_(symmetric), pure_(pure) {}

    static LinearOp identity(std::size_t n);
    static LinearOp from_matrix(std::shared_ptr<const CsrMatrix> a, bool symmetric);
    static LinearOp from_dense(std::shared_ptr<const DenseMatrix> a, bool symmetric);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] bool symmetric() const noexcept { return symmetric_; }
    [[nodiscard]] bool pure() const noexcept { return pure_; }
    [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(apply_); }

    void apply(std::span<const double> x, std::span<double> y) const { apply_(x, y); }
    [[nodiscard]] Vec operator()(std::span<const double> x) const {
        Vec y(n_);
        apply_(x, y);
        return y;
    }

    /// Applies the operator to every column of x.
    [[nodiscard]] DenseMatrix apply_columns(const DenseMatrix& x, unsigned threads = 1) const;

private:
    std::size_t n_ = 0;
    ApplyFn apply_;
    bool symmetric_ = false;
    bool pure_ = true;
};

/// Thread-safe apply counter shared between copies of a counted operator.
using ApplyCounter = std::shared_ptr<std::atomic<std::size_t>>;

inline ApplyCounter make_counter() { return std::make_shared<std::atomic<std::size_t>>(0); }

/// Wraps `op` so that every application increments `counter`.
LinearOp counted(const LinearOp& op, ApplyCounter counter);

/// Largest |<Ax,y> - <x,Ay>| / (||Ax|| ||y||) over `probes` random pairs.
double symmetry_defect(const LinearOp& op, std::uint64_t seed, int probes = 10);

/// Dense matrix of an operator built column by column (tests and small oracles).
DenseMatrix to_dense(const LinearOp& op);

}  // namespace pdeinv
