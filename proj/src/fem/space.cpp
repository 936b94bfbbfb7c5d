#include "pdeinv/fem/space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "pdeinv/error.hpp"

namespace pdeinv {

const QuadratureRule& triangle_rule(int space_degree) {
    static const QuadratureRule p1{
        {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}},
        {1.0 / 3, 1.0 / 3, 1.0 / 3},
        2};
    static const QuadratureRule p2 = [] {
        constexpr double a = 0.44594849091596488632, wa = 0.22338158967801146570;
        constexpr double b = 0.09157621350977074346, wb = 0.10995174365532186764;
        return QuadratureRule{{{1 - 2 * a, a, a},
                               {a, 1 - 2 * a, a},
                               {a, a, 1 - 2 * a},
                               {1 - 2 * b, b, b},
                               {b, 1 - 2 * b, b},
                               {b, b, 1 - 2 * b}},
                              {wa, wa, wa, wb, wb, wb},
                              4};
    }();
    if (space_degree == 1) return p1;
    if (space_degree == 2) return p2;
    throw InvalidArgument("no quadrature rule for degree " + std::to_string(space_degree));
}

const EdgeRule& edge_rule(int space_degree) {
    static const EdgeRule p1 = [] {
        const double d = 0.5 / std::sqrt(3.0);
        return EdgeRule{{0.5 - d, 0.5 + d}, {0.5, 0.5}};
    }();
    static const EdgeRule p2 = [] {
        const double d = 0.5 * std::sqrt(0.6);
        return EdgeRule{{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18, 8.0 / 18, 5.0 / 18}};
    }();
    if (space_degree == 1) return p1;
    if (space_degree == 2) return p2;
    throw InvalidArgument("no edge rule for degree " + std::to_string(space_degree));
}

FnSpace::FnSpace(std::shared_ptr<const Mesh> mesh, int degree) : mesh_(std::move(mesh)), degree_(degree) {
    if (degree != 1 && degree != 2) throw InvalidArgument("FnSpace: degree must be 1 or 2");
    const auto& verts = mesh_->vertices();
    const auto& tris = mesh_->triangles();
    coords_ = verts;
    const std::size_t k = dofs_per_element();
    cell_dofs_.resize(tris.size() * k);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_id;
    for (std::size_t t = 0; t < tris.size(); ++t) {
        for (int i = 0; i < 3; ++i) cell_dofs_[t * k + i] = tris[t][i];
        if (degree_ == 1) continue;
        for (int e = 0; e < 3; ++e) {
            const std::size_t a = tris[t][e], b = tris[t][(e + 1) % 3];
            auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto [it, inserted] = edge_id.try_emplace(key, coords_.size());
            if (inserted) coords_.push_back({0.5 * (verts[a].x + verts[b].x), 0.5 * (verts[a].y + verts[b].y)});
            cell_dofs_[t * k + 3 + e] = it->second;
        }
    }
}

std::vector<std::size_t> FnSpace::edge_dofs(const BoundaryEdge& e) const {
    std::vector<std::size_t> d{e.v[0], e.v[1]};
    if (degree_ == 2) d.push_back(element_dofs(e.triangle)[3 + e.local_edge]);
    return d;
}

std::vector<std::size_t> FnSpace::boundary_dofs(BoundaryTag tag) const {
    std::set<std::size_t> s;
    for (const auto& e : mesh_->boundary_edges())
        if (e.tag == tag)
            for (std::size_t d : edge_dofs(e)) s.insert(d);
    return {s.begin(), s.end()};
}

Vec FnSpace::interpolate(const std::function<double(double, double)>& f) const {
    Vec v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = f(coords_[i].x, coords_[i].y);
    return v;
}

void FnSpace::basis(const std::array<double, 3>& l, std::span<double> out) const {
    if (degree_ == 1) {
        out[0] = l[0];
        out[1] = l[1];
        out[2] = l[2];
        return;
    }
    for (int i = 0; i < 3; ++i) out[i] = l[i] * (2 * l[i] - 1);
    out[3] = 4 * l[0] * l[1];
    out[4] = 4 * l[1] * l[2];
    out[5] = 4 * l[2] * l[0];
}

void FnSpace::basis_gradients(std::size_t t, const std::array<double, 3>& l, std::span<Point> out) const {
    const auto g = mesh_->grad_lambda(t);
    if (degree_ == 1) {
        for (int i = 0; i < 3; ++i) out[i] = g[i];
        return;
    }
    for (int i = 0; i < 3; ++i) out[i] = {(4 * l[i] - 1) * g[i].x, (4 * l[i] - 1) * g[i].y};
    for (int e = 0; e < 3; ++e) {
        const int a = e, b = (e + 1) % 3;
        out[3 + e] = {4 * (l[b] * g[a].x + l[a] * g[b].x), 4 * (l[b] * g[a].y + l[a] * g[b].y)};
    }
}

double FnSpace::evaluate(std::span<const double> coeffs, Point p) const {
    const auto loc = mesh_->locate(p);
    if (!loc) {
        std::ostringstream os;
        os << "point (" << p.x << ", " << p.y << ") lies outside the mesh";
        throw InvalidArgument(os.str());
    }
    std::array<double, 6> phi{};
    basis(loc->bary, phi);
    double s = 0.0;
    const auto dofs = element_dofs(loc->triangle);
    for (std::size_t k = 0; k < dofs.size(); ++k) s += coeffs[dofs[k]] * phi[k];
    return s;
}

Vec FnSpace::evaluate_at_quadrature(std::span<const double> coeffs, const QuadratureRule& rule) const {
    const std::size_t nt = mesh_->num_triangles(), nq = rule.size();
    Vec out(nt * nq);
    std::array<double, 6> phi{};
    for (std::size_t t = 0; t < nt; ++t) {
        const auto dofs = element_dofs(t);
        for (std::size_t q = 0; q < nq; ++q) {
            basis(rule.bary[q], phi);
            double s = 0.0;
            for (std::size_t k = 0; k < dofs.size(); ++k) s += coeffs[dofs[k]] * phi[k];
            out[t * nq + q] = s;
        }
    }
    return out;
}

}  // namespace pdeinv
