#include "pdeinv/fem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pdeinv/error.hpp"
#include "pdeinv/random.hpp"

namespace pdeinv {

std::string to_string(const Rect& r) {
    std::ostringstream os;
    os << "[" << r.x0 << ", " << r.x1 << "] x [" << r.y0 << ", " << r.y1 << "]";
    return os.str();
}

std::string_view to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::bottom: return "bottom";
        case BoundaryTag::top: return "top";
        case BoundaryTag::left: return "left";
        case BoundaryTag::right: return "right";
        case BoundaryTag::hole: return "hole";
    }
    return "unknown";
}

BoundaryTag parse_boundary_tag(std::string_view name) {
    for (auto tag : {BoundaryTag::bottom, BoundaryTag::top, BoundaryTag::left, BoundaryTag::right, BoundaryTag::hole})
        if (to_string(tag) == name) return tag;
    throw InvalidArgument("unknown boundary tag '" + std::string(name) + "'");
}

double Mesh::area(std::size_t t) const {
    const auto& tri = triangles_[t];
    const Point a = vertices_[tri[0]], b = vertices_[tri[1]], c = vertices_[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double Mesh::diameter(std::size_t t) const {
    const auto& tri = triangles_[t];
    double h = 0.0;
    for (int k = 0; k < 3; ++k) {
        const Point a = vertices_[tri[k]], b = vertices_[tri[(k + 1) % 3]];
        h = std::max(h, std::hypot(b.x - a.x, b.y - a.y));
    }
    return h;
}

Point Mesh::barycenter(std::size_t t) const { return map(t, {1.0 / 3, 1.0 / 3, 1.0 / 3}); }

std::array<Point, 3> Mesh::grad_lambda(std::size_t t) const {
    const auto& tri = triangles_[t];
    const Point p0 = vertices_[tri[0]], p1 = vertices_[tri[1]], p2 = vertices_[tri[2]];
    const double a2 = 2.0 * area(t);
    return {Point{(p1.y - p2.y) / a2, (p2.x - p1.x) / a2}, Point{(p2.y - p0.y) / a2, (p0.x - p2.x) / a2},
            Point{(p0.y - p1.y) / a2, (p1.x - p0.x) / a2}};
}

Point Mesh::map(std::size_t t, const std::array<double, 3>& bary) const {
    const auto& tri = triangles_[t];
    Point p;
    for (int k = 0; k < 3; ++k) {
        p.x += bary[k] * vertices_[tri[k]].x;
        p.y += bary[k] * vertices_[tri[k]].y;
    }
    return p;
}

double Mesh::total_area() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) s += area(t);
    return s;
}

std::optional<Location> Mesh::locate(Point p) const {
    constexpr double tol = 1e-12;
    if (p.x < -tol || p.x > 1 + tol || p.y < -tol || p.y > 1 + tol) return std::nullopt;
    const long ci = std::clamp(static_cast<long>(std::floor(p.x * static_cast<double>(nx_))), 0L,
                               static_cast<long>(nx_) - 1);
    const long cj = std::clamp(static_cast<long>(std::floor(p.y * static_cast<double>(ny_))), 0L,
                               static_cast<long>(ny_) - 1);
    std::optional<Location> best;
    double best_min = -1e300;
    // Points on cell edges may belong to a neighbouring (unmasked) cell.
    for (long dj = -1; dj <= 1; ++dj)
        for (long di = -1; di <= 1; ++di) {
            const long i = ci + di, j = cj + dj;
            if (i < 0 || j < 0 || i >= static_cast<long>(nx_) || j >= static_cast<long>(ny_)) continue;
            for (long t : cell_triangles_[static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i)]) {
                if (t < 0) continue;
                const auto tt = static_cast<std::size_t>(t);
                const auto g = grad_lambda(tt);
                const Point v0 = vertices_[triangles_[tt][0]];
                const Point v1 = vertices_[triangles_[tt][1]];
                const Point v2 = vertices_[triangles_[tt][2]];
                std::array<double, 3> b{};
                b[0] = g[0].x * (p.x - v1.x) + g[0].y * (p.y - v1.y);
                b[1] = g[1].x * (p.x - v2.x) + g[1].y * (p.y - v2.y);
                b[2] = g[2].x * (p.x - v0.x) + g[2].y * (p.y - v0.y);
                const double m = std::min({b[0], b[1], b[2]});
                if (m > best_min) {
                    best_min = m;
                    best = Location{tt, b};
                }
            }
        }
    if (!best || best_min < -1e-10) return std::nullopt;
    for (auto& b : best->bary) b = std::max(b, 0.0);
    const double s = best->bary[0] + best->bary[1] + best->bary[2];
    for (auto& b : best->bary) b /= s;
    return best;
}

Mesh build_unit_square_mesh(std::size_t nx, std::size_t ny, const std::vector<Rect>& holes) {
    if (nx < 1 || ny < 1) throw InvalidArgument("build_unit_square_mesh: nx and ny must be >= 1");
    const double hx = 1.0 / static_cast<double>(nx), hy = 1.0 / static_cast<double>(ny);
    auto on_grid = [](double v, std::size_t n) {
        const double s = v * static_cast<double>(n);
        return std::abs(s - std::round(s)) < 1e-6;
    };
    for (const Rect& r : holes) {
        const bool inside = r.x0 > 0 && r.y0 > 0 && r.x1 < 1 && r.y1 < 1 && r.x0 < r.x1 && r.y0 < r.y1;
        if (!inside || !on_grid(r.x0, nx) || !on_grid(r.x1, nx) || !on_grid(r.y0, ny) || !on_grid(r.y1, ny))
            throw InvalidArgument("hole " + to_string(r) + " is not strictly inside the unit square on a " +
                                  std::to_string(nx) + "x" + std::to_string(ny) + " grid");
    }

    std::vector<bool> masked(nx * ny, false);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const Point c{(static_cast<double>(i) + 0.5) * hx, (static_cast<double>(j) + 0.5) * hy};
            for (const Rect& r : holes)
                if (r.contains(c)) masked[j * nx + i] = true;
        }

    // Keep only vertices touched by an unmasked cell, numbered row by row.
    const std::size_t gx = nx + 1;
    std::vector<bool> used(gx * (ny + 1), false);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i)
            if (!masked[j * nx + i])
                for (std::size_t dj = 0; dj < 2; ++dj)
                    for (std::size_t di = 0; di < 2; ++di) used[(j + dj) * gx + i + di] = true;

    Mesh mesh;
    mesh.nx_ = nx;
    mesh.ny_ = ny;
    mesh.holes_ = holes;
    std::vector<std::size_t> vid(used.size(), 0);
    for (std::size_t j = 0; j <= ny; ++j)
        for (std::size_t i = 0; i <= nx; ++i)
            if (used[j * gx + i]) {
                vid[j * gx + i] = mesh.vertices_.size();
                mesh.vertices_.push_back({static_cast<double>(i) * hx, static_cast<double>(j) * hy});
            }

    mesh.cell_triangles_.assign(nx * ny, {-1, -1});
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            if (masked[j * nx + i]) continue;
            const std::size_t v00 = vid[j * gx + i], v10 = vid[j * gx + i + 1];
            const std::size_t v01 = vid[(j + 1) * gx + i], v11 = vid[(j + 1) * gx + i + 1];
            mesh.cell_triangles_[j * nx + i] = {static_cast<long>(mesh.triangles_.size()),
                                                static_cast<long>(mesh.triangles_.size() + 1)};
            mesh.triangles_.push_back({v00, v10, v11});
            mesh.triangles_.push_back({v00, v11, v01});
        }

    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<std::size_t, int>>> edges;
    for (std::size_t t = 0; t < mesh.triangles_.size(); ++t)
        for (int k = 0; k < 3; ++k) {
            const std::size_t a = mesh.triangles_[t][k], b = mesh.triangles_[t][(k + 1) % 3];
            edges[{std::min(a, b), std::max(a, b)}].push_back({t, k});
        }
    for (std::size_t t = 0; t < mesh.triangles_.size(); ++t)
        for (int k = 0; k < 3; ++k) {
            const std::size_t a = mesh.triangles_[t][k], b = mesh.triangles_[t][(k + 1) % 3];
            if (edges[{std::min(a, b), std::max(a, b)}].size() != 1) continue;
            const Point pa = mesh.vertices_[a], pb = mesh.vertices_[b];
            BoundaryTag tag = BoundaryTag::hole;
            constexpr double eps = 1e-12;
            if (std::abs(pa.y) < eps && std::abs(pb.y) < eps) tag = BoundaryTag::bottom;
            else if (std::abs(pa.y - 1) < eps && std::abs(pb.y - 1) < eps) tag = BoundaryTag::top;
            else if (std::abs(pa.x) < eps && std::abs(pb.x) < eps) tag = BoundaryTag::left;
            else if (std::abs(pa.x - 1) < eps && std::abs(pb.x - 1) < eps) tag = BoundaryTag::right;
            mesh.boundary_.push_back({{a, b}, t, k, tag});
        }
    return mesh;
}

std::vector<Point> random_points(const Mesh& mesh, const Rect& window, std::size_t n, std::uint64_t seed) {
    if (!(window.x1 > window.x0 && window.y1 > window.y0)) throw InvalidArgument("random_points: empty window");
    RandomStream rng(seed);
    std::vector<Point> pts;
    pts.reserve(n);
    std::size_t tries = 0;
    while (pts.size() < n) {
        if (++tries > 1000 * (n + 1))
            throw InvalidArgument("random_points: window " + to_string(window) + " barely intersects the mesh");
        const Point p{rng.uniform(window.x0, window.x1), rng.uniform(window.y0, window.y1)};
        if (mesh.locate(p)) pts.push_back(p);
    }
    return pts;
}

}  // namespace pdeinv
