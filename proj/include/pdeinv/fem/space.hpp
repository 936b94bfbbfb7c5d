#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pdeinv/fem/mesh.hpp"
#include "pdeinv/linalg/vector.hpp"

namespace pdeinv {

/// Triangle rule in barycentric coordinates; weights sum to 1 and are
/// scaled by the element area at use.
struct QuadratureRule {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> weights;
    int exactness = 0;
    [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
};

/// Gauss rule on [0, 1]; weights sum to 1 and are scaled by the edge length.
struct EdgeRule {
    std::vector<double> s;
    std::vector<double> weights;
};

/// 3-point degree-2 rule for P1 forms, 6-point degree-4 rule for P2.
const QuadratureRule& triangle_rule(int space_degree);
/// 2-point Gauss for P1, 3-point Gauss for P2.
const EdgeRule& edge_rule(int space_degree);

/// Per-element quadrature layout: point q of triangle t has global index
/// t * rule.size() + q, giving q_tot = num_triangles * rule.size().
struct Quadrature {
    const QuadratureRule* rule = nullptr;
    std::size_t num_elements = 0;
    [[nodiscard]] std::size_t points_per_element() const { return rule->size(); }
    [[nodiscard]] std::size_t total() const { return num_elements * rule->size(); }
};

/// Continuous Lagrange space of degree 1 or 2. P2 dofs are the vertices
/// followed by the edges in order of first appearance.
class FnSpace {
public:
    FnSpace(std::shared_ptr<const Mesh> mesh, int degree);

    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] std::shared_ptr<const Mesh> mesh_ptr() const noexcept { return mesh_; }
    [[nodiscard]] int degree() const noexcept { return degree_; }
    [[nodiscard]] std::size_t size() const noexcept { return coords_.size(); }
    [[nodiscard]] std::size_t dofs_per_element() const noexcept { return degree_ == 1 ? 3 : 6; }
    [[nodiscard]] std::span<const std::size_t> element_dofs(std::size_t t) const {
        return {cell_dofs_.data() + t * dofs_per_element(), dofs_per_element()};
    }
    [[nodiscard]] const std::vector<Point>& dof_coords() const noexcept { return coords_; }
    [[nodiscard]] Quadrature quadrature() const { return {&triangle_rule(degree_), mesh_->num_triangles()}; }

    /// Sorted dofs lying on boundary edges with the given tag.
    [[nodiscard]] std::vector<std::size_t> boundary_dofs(BoundaryTag tag) const;
    /// Dofs of a boundary edge (2 for P1, 3 for P2: ends then midpoint).
    [[nodiscard]] std::vector<std::size_t> edge_dofs(const BoundaryEdge& e) const;

    [[nodiscard]] Vec interpolate(const std::function<double(double, double)>& f) const;
    /// Value of a field at an arbitrary point; throws when the point is outside.
    [[nodiscard]] double evaluate(std::span<const double> coeffs, Point p) const;
    /// Field values at every quadrature point of `rule` (layout as Quadrature).
    [[nodiscard]] Vec evaluate_at_quadrature(std::span<const double> coeffs, const QuadratureRule& rule) const;

    /// Local basis values at barycentric coordinates.
    void basis(const std::array<double, 3>& bary, std::span<double> out) const;
    /// Local basis gradients for triangle t.
    void basis_gradients(std::size_t t, const std::array<double, 3>& bary, std::span<Point> out) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    int degree_;
    std::vector<Point> coords_;
    std::vector<std::size_t> cell_dofs_;
};

}  // namespace pdeinv
