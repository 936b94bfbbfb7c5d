#include "pdeinv/linalg/linear_op.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "pdeinv/random.hpp"

namespace pdeinv {

LinearOp LinearOp::identity(std::size_t n) {
    return {n, [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); },
            true};
}

LinearOp LinearOp::from_matrix(std::shared_ptr<const CsrMatrix> a, bool symmetric) {
    const std::size_t n = a->rows();
    return {n, [a = std::move(a)](std::span<const double> x, std::span<double> y) { a->multiply(x, y); },
            symmetric};
}

LinearOp LinearOp::from_dense(std::shared_ptr<const DenseMatrix> a, bool symmetric) {
    const std::size_t n = a->rows();
    return {n,
            [a = std::move(a)](std::span<const double> x, std::span<double> y) {
                std::fill(y.begin(), y.end(), 0.0);
                for (std::size_t k = 0; k < a->cols(); ++k) axpy(x[k], a->col(k), y);
            },
            symmetric};
}

DenseMatrix LinearOp::apply_columns(const DenseMatrix& x, unsigned threads) const {
    DenseMatrix y(n_, x.cols());
    const std::size_t ncols = x.cols();
    const unsigned workers = pure_ ? std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(ncols))) : 1u;
    if (workers <= 1) {
        for (std::size_t j = 0; j < ncols; ++j) apply_(x.col(j), y.col(j));
        return y;
    }
    // Each worker owns a fixed, interleaved set of columns; outputs never overlap.
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t j = w; j < ncols; j += workers) apply_(x.col(j), y.col(j));
        });
    }
    pool.clear();
    return y;
}

LinearOp counted(const LinearOp& op, ApplyCounter counter) {
    return {op.size(),
            [op, counter = std::move(counter)](std::span<const double> x, std::span<double> y) {
                counter->fetch_add(1, std::memory_order_relaxed);
                op.apply(x, y);
            },
            op.symmetric(), op.pure()};
}

double symmetry_defect(const LinearOp& op, std::uint64_t seed, int probes) {
    RandomStream rng(seed);
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        const Vec x = rng.normal_vector(op.size());
        const Vec y = rng.normal_vector(op.size());
        const Vec ax = op(x);
        const Vec ay = op(y);
        const double denom = norm2(ax) * norm2(y);
        const double defect = std::abs(dot(ax, y) - dot(x, ay));
        worst = std::max(worst, denom > 0.0 ? defect / denom : defect);
    }
    return worst;
}

DenseMatrix to_dense(const LinearOp& op) {
    const std::size_t n = op.size();
    DenseMatrix a(n, n);
    Vec e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        op.apply(e, a.col(j));
        e[j] = 0.0;
    }
    return a;
}

}  // namespace pdeinv
