#pragma once

// Portable, seedable random streams. Everything random in the library flows
// from an explicit 64-bit seed so results are reproducible across runs.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

#include "pdeinv/linalg/dense.hpp"
#include "pdeinv/linalg/vector.hpp"

namespace pdeinv {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent child seed from (seed, stream).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Uniform in (0, 1), never exactly 0 or 1.
constexpr double to_unit_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Sequential stream of uniforms and standard normals (Box-Muller).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : state_(splitmix64(seed)) {}

    std::uint64_t next_bits() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return splitmix64(state_);
    }
    double uniform() noexcept { return to_unit_open(next_bits()); }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    double rademacher() noexcept { return (next_bits() >> 63) ? 1.0 : -1.0; }

    Vec normal_vector(std::size_t n) {
        Vec v(n);
        for (auto& x : v) x = normal();
        return v;
    }
    Vec rademacher_vector(std::size_t n) {
        Vec v(n);
        for (auto& x : v) x = rademacher();
        return v;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Gaussian test matrix whose column j depends only on (seed, j), so adding
/// columns never changes the existing ones.
inline DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    DenseMatrix omega(rows, cols);
    for (std::size_t j = 0; j < cols; ++j) {
        RandomStream stream(derive_seed(seed, j));
        for (auto& v : omega.col(j)) v = stream.normal();
    }
    return omega;
}

}  // namespace pdeinv
