#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdeinv {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
    double x0, y0, x1, y1;
    [[nodiscard]] bool contains(Point p, double tol = 0.0) const {
        return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
    }
};

std::string to_string(const Rect& r);

enum class BoundaryTag : unsigned char { bottom, top, left, right, hole };

std::string_view to_string(BoundaryTag tag);
/// Throws InvalidArgument for unknown names.
BoundaryTag parse_boundary_tag(std::string_view name);

struct BoundaryEdge {
    std::array<std::size_t, 2> v;
    std::size_t triangle;
    int local_edge;  // edge k joins local vertices k and (k+1) % 3
    BoundaryTag tag;
};

/// Located point: containing triangle and barycentric coordinates.
struct Location {
    std::size_t triangle;
    std::array<double, 3> bary;
};

/// Structured triangulation of the unit square. Every grid cell is split
/// along its (x0,y0)-(x1,y1) diagonal; cells inside holes are removed.
class Mesh {
public:
    [[nodiscard]] std::size_t num_vertices() const noexcept { return vertices_.size(); }
    [[nodiscard]] std::size_t num_triangles() const noexcept { return triangles_.size(); }
    [[nodiscard]] const std::vector<Point>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<std::array<std::size_t, 3>>& triangles() const noexcept { return triangles_; }
    [[nodiscard]] const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return boundary_; }
    [[nodiscard]] const std::vector<Rect>& holes() const noexcept { return holes_; }
    [[nodiscard]] std::size_t nx() const noexcept { return nx_; }
    [[nodiscard]] std::size_t ny() const noexcept { return ny_; }

    [[nodiscard]] double area(std::size_t t) const;
    /// Longest edge length.
    [[nodiscard]] double diameter(std::size_t t) const;
    [[nodiscard]] Point barycenter(std::size_t t) const;
    /// Gradients of the three barycentric coordinates (constant on the triangle).
    [[nodiscard]] std::array<Point, 3> grad_lambda(std::size_t t) const;
    [[nodiscard]] Point map(std::size_t t, const std::array<double, 3>& bary) const;
    [[nodiscard]] double total_area() const;

    /// Triangle containing p, or nullopt when p lies outside the domain or in a hole.
    [[nodiscard]] std::optional<Location> locate(Point p) const;

    friend Mesh build_unit_square_mesh(std::size_t nx, std::size_t ny, const std::vector<Rect>& holes);

private:
    std::vector<Point> vertices_;
    std::vector<std::array<std::size_t, 3>> triangles_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<Rect> holes_;
    std::size_t nx_ = 0, ny_ = 0;
    std::vector<std::array<long, 2>> cell_triangles_;  // -1 for masked cells
};

/// Holes must lie strictly inside (0,1)^2 with edges on grid lines.
Mesh build_unit_square_mesh(std::size_t nx, std::size_t ny, const std::vector<Rect>& holes = {});

/// n points drawn uniformly in `window` that lie inside the mesh (points in
/// holes are redrawn). Deterministic for a given seed.
std::vector<Point> random_points(const Mesh& mesh, const Rect& window, std::size_t n, std::uint64_t seed);

}  // namespace pdeinv
