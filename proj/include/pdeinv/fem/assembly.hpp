#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pdeinv/fem/mesh.hpp"
#include "pdeinv/fem/space.hpp"
#include "pdeinv/linalg/sparse.hpp"
#include "pdeinv/linalg/vector.hpp"

namespace pdeinv {

/// Symmetric 2x2 tensor [[xx, xy], [xy, yy]].
struct Tensor2 {
    double xx = 1.0, xy = 0.0, yy = 1.0;
    [[nodiscard]] bool is_spd() const { return xx > 0 && yy > 0 && xx * yy - xy * xy > 0; }
    [[nodiscard]] Point apply(Point g) const { return {xx * g.x + xy * g.y, xy * g.x + yy * g.y}; }
    /// Symmetric positive square root; requires is_spd().
    [[nodiscard]] Tensor2 sqrt() const;
};

/// Anisotropy tensor with principal values theta1, theta2 rotated by alpha:
/// [[t1 s^2 + t2 c^2, (t1 - t2) s c], [(t1 - t2) s c, t1 c^2 + t2 s^2]].
Tensor2 anisotropic_tensor(double alpha, double theta1, double theta2);

/// gamma * <Theta grad u, grad v> + delta * <u, v> + beta * <u, v>_boundary
struct EllipticForm {
    double gamma = 1.0;
    Tensor2 theta{};
    double delta = 1.0;
    double beta = 0.0;
};

CsrMatrix assemble_mass(const FnSpace& space);
CsrMatrix assemble_stiffness(const FnSpace& space, const Tensor2& theta = {});
/// Mass matrix over all boundary edges (outer and hole boundaries).
CsrMatrix assemble_boundary_mass(const FnSpace& space);
/// Throws InvalidArgument for a non-SPD Theta or negative coefficients.
CsrMatrix assemble_elliptic(const FnSpace& space, const EllipticForm& form);

/// <w grad u, grad v> with w given at every quadrature point of
/// triangle_rule(space.degree()) (layout t * nq + q).
CsrMatrix assemble_weighted_stiffness(const FnSpace& space, std::span<const double> weight);

/// Load vector <f, v>.
Vec assemble_load(const FnSpace& space, const std::function<double(double, double)>& f);
/// Boundary load <h, v> over the edges carrying `tag`.
Vec assemble_boundary_load(const FnSpace& space, BoundaryTag tag, const std::function<double(double, double)>& h);

/// <v . grad u, w> for an elementwise-constant velocity (one Point per triangle).
CsrMatrix assemble_advection(const FnSpace& space, std::span<const Point> velocity);
/// Galerkin least-squares term sum_e tau_e <v . grad u, v . grad w>_e with
/// tau_e = (4 kappa / h_e^2 + 2 |v_e| / h_e)^{-1}.
CsrMatrix assemble_gls(const FnSpace& space, std::span<const Point> velocity, double kappa);

/// Rectangular factor C (n x q_tot) with C C^T = assemble_mass(space).
CsrMatrix rect_factor_mass(const FnSpace& space);
/// Rectangular factor with C C^T = assemble_elliptic(space, form). Each
/// volume quadrature point contributes three columns (two gradient, one
/// value), each boundary quadrature point one column.
CsrMatrix rect_factor_elliptic(const FnSpace& space, const EllipticForm& form);

/// Pointwise evaluation matrix B (q x n). Throws InvalidArgument naming the
/// first point outside the domain.
CsrMatrix point_observation(const FnSpace& space, std::span<const Point> points);

/// Interpolation from a coarser-degree space on the same mesh into `to`.
CsrMatrix interpolation_matrix(const FnSpace& from, const FnSpace& to);

/// Symmetric elimination: rhs -= A[:, D] g, rows and columns of D replaced by
/// the identity, rhs[D] = g.
void apply_dirichlet(CsrMatrix& a, Vec& rhs, std::span<const std::size_t> dofs, std::span<const double> values);
void apply_dirichlet(CsrMatrix& a, Vec& rhs, const FnSpace& space, BoundaryTag tag,
                     const std::function<double(double, double)>& value);

}  // namespace pdeinv
