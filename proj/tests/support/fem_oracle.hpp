#pragma once

// Brute-force finite element integration for tests: a collapsed
// Gauss-Legendre product rule on each triangle (exact far beyond the degrees
// used here) and Lagrange bases obtained by inverting a monomial Vandermonde
// matrix at the element nodes.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "pdeinv/fem/space.hpp"
#include "support/oracles.hpp"

namespace oracle {

struct Gauss1d {
    std::vector<double> x, w;  // on [0, 1]
};

inline Gauss1d gauss_legendre(int n) {
    Gauss1d g;
    for (int i = 1; i <= n; ++i) {
        double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        g.x.push_back(0.5 * (1 - z));
        g.w.push_back(1.0 / ((1 - z * z) * dp * dp));
    }
    return g;
}

/// Quadrature points (x, y, weight) over triangle t of the mesh.
inline std::vector<std::array<double, 3>> triangle_points(const pdeinv::Mesh& mesh, std::size_t t) {
    static const Gauss1d g = gauss_legendre(10);
    const auto& tri = mesh.triangles()[t];
    const auto a = mesh.vertices()[tri[0]], b = mesh.vertices()[tri[1]], c = mesh.vertices()[tri[2]];
    const double jac = std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    std::vector<std::array<double, 3>> pts;
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (std::size_t j = 0; j < g.x.size(); ++j) {
            const double u = g.x[i], v = g.x[j] * (1 - g.x[i]);
            const double w = g.w[i] * g.w[j] * (1 - g.x[i]) * jac;
            pts.push_back({a.x + u * (b.x - a.x) + v * (c.x - a.x), a.y + u * (b.y - a.y) + v * (c.y - a.y), w});
        }
    return pts;
}

/// Lagrange basis on one element of `space`, built from the element's dof
/// coordinates; evaluates values and gradients at a physical point.
class ElementBasis {
public:
    ElementBasis(const pdeinv::FnSpace& space, std::size_t t) : deg_(space.degree()) {
        const auto dofs = space.element_dofs(t);
        const std::size_t k = dofs.size();
        DenseMatrix v(k, k);
        for (std::size_t i = 0; i < k; ++i) {
            const auto p = space.dof_coords()[dofs[i]];
            const auto m = monomials(p.x, p.y);
            for (std::size_t j = 0; j < k; ++j) v(i, j) = m[j];
        }
        coef_ = inverse(v);  // column i holds the monomial coefficients of basis i
    }
    [[nodiscard]] std::vector<double> values(double x, double y) const {
        const auto m = monomials(x, y);
        std::vector<double> out(coef_.cols(), 0.0);
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = 0; j < out.size(); ++j) out[i] += coef_(j, i) * m[j];
        return out;
    }
    [[nodiscard]] std::vector<std::array<double, 2>> gradients(double x, double y) const {
        // d/dx and d/dy of {1, x, y, x^2, xy, y^2}
        const std::array<double, 6> dx{0, 1, 0, 2 * x, y, 0}, dy{0, 0, 1, 0, x, 2 * y};
        std::vector<std::array<double, 2>> out(coef_.cols(), {0.0, 0.0});
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = 0; j < out.size(); ++j) {
                out[i][0] += coef_(j, i) * dx[j];
                out[i][1] += coef_(j, i) * dy[j];
            }
        return out;
    }

private:
    [[nodiscard]] std::vector<double> monomials(double x, double y) const {
        if (deg_ == 1) return {1, x, y};
        return {1, x, y, x * x, x * y, y * y};
    }
    int deg_;
    DenseMatrix coef_;
};

/// Dense assembly of sum_e int kernel(x, y, phi, grad) over every element.
using LocalKernel = std::function<double(double, double, double, double, std::array<double, 2>,
                                         std::array<double, 2>)>;

inline DenseMatrix assemble(const pdeinv::FnSpace& space, const LocalKernel& kernel) {
    DenseMatrix a(space.size(), space.size());
    for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
        const ElementBasis basis(space, t);
        const auto dofs = space.element_dofs(t);
        for (const auto& p : triangle_points(space.mesh(), t)) {
            const auto phi = basis.values(p[0], p[1]);
            const auto grad = basis.gradients(p[0], p[1]);
            for (std::size_t i = 0; i < dofs.size(); ++i)
                for (std::size_t j = 0; j < dofs.size(); ++j)
                    a(dofs[i], dofs[j]) += p[2] * kernel(p[0], p[1], phi[i], phi[j], grad[i], grad[j]);
        }
    }
    return a;
}

/// L2 norm of (u_h - exact) over the mesh.
inline double l2_error(const pdeinv::FnSpace& space, const Vec& u, const std::function<double(double, double)>& exact) {
    double s = 0;
    for (std::size_t t = 0; t < space.mesh().num_triangles(); ++t) {
        const ElementBasis basis(space, t);
        const auto dofs = space.element_dofs(t);
        for (const auto& p : triangle_points(space.mesh(), t)) {
            const auto phi = basis.values(p[0], p[1]);
            double uh = 0;
            for (std::size_t i = 0; i < dofs.size(); ++i) uh += u[dofs[i]] * phi[i];
            const double e = uh - exact(p[0], p[1]);
            s += p[2] * e * e;
        }
    }
    return std::sqrt(s);
}

}  // namespace oracle
