#include "pdeinv/fem/assembly.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "pdeinv/error.hpp"

namespace pdeinv {

Tensor2 Tensor2::sqrt() const {
    if (!is_spd()) throw InvalidArgument("Tensor2::sqrt: tensor is not SPD");
    const double s = std::sqrt(xx * yy - xy * xy);
    const double t = std::sqrt(xx + yy + 2 * s);
    return {(xx + s) / t, xy / t, (yy + s) / t};
}

Tensor2 anisotropic_tensor(double alpha, double theta1, double theta2) {
    const double s = std::sin(alpha), c = std::cos(alpha);
    return {theta1 * s * s + theta2 * c * c, (theta1 - theta2) * s * c, theta1 * c * c + theta2 * s * s};
}

namespace {

double dotp(Point a, Point b) { return a.x * b.x + a.y * b.y; }

// Loops over elements and quadrature points, calling
// kernel(t, q, w |T|, phi, grad_phi, local_matrix).
template <class Kernel>
CsrMatrix assemble_volume(const FnSpace& space, Kernel kernel) {
    const Mesh& mesh = space.mesh();
    const QuadratureRule& rule = triangle_rule(space.degree());
    const std::size_t k = space.dofs_per_element();
    std::vector<Triplet> trip;
    trip.reserve(mesh.num_triangles() * k * k);
    std::array<double, 6> phi{};
    std::array<Point, 6> grad{};
    std::array<double, 36> local{};
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        local.fill(0.0);
        const double area = mesh.area(t);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            space.basis(rule.bary[q], phi);
            space.basis_gradients(t, rule.bary[q], grad);
            kernel(t, q, rule.weights[q] * area, phi, grad, local);
        }
        const auto dofs = space.element_dofs(t);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) trip.push_back({dofs[i], dofs[j], local[i * 6 + j]});
    }
    return CsrMatrix::from_triplets(space.size(), space.size(), std::move(trip));
}

std::array<double, 3> edge_bary(int local_edge, double s) {
    std::array<double, 3> b{0, 0, 0};
    b[local_edge] = 1 - s;
    b[(local_edge + 1) % 3] = s;
    return b;
}

double edge_length(const Mesh& mesh, const BoundaryEdge& e) {
    const Point a = mesh.vertices()[e.v[0]], b = mesh.vertices()[e.v[1]];
    return std::hypot(b.x - a.x, b.y - a.y);
}

void check_velocity(const FnSpace& space, std::span<const Point> velocity) {
    if (velocity.size() != space.mesh().num_triangles())
        throw InvalidArgument("velocity must have one value per triangle (" +
                              std::to_string(space.mesh().num_triangles()) + "), got " +
                              std::to_string(velocity.size()));
}

}  // namespace

CsrMatrix assemble_mass(const FnSpace& space) {
    const std::size_t k = space.dofs_per_element();
    return assemble_volume(space, [k](std::size_t, std::size_t, double w, const auto& phi, const auto&, auto& local) {
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) local[i * 6 + j] += w * phi[i] * phi[j];
    });
}

CsrMatrix assemble_stiffness(const FnSpace& space, const Tensor2& theta) {
    const std::size_t k = space.dofs_per_element();
    return assemble_volume(space,
                           [k, theta](std::size_t, std::size_t, double w, const auto&, const auto& g, auto& local) {
                               for (std::size_t i = 0; i < k; ++i) {
                                   const Point tg = theta.apply(g[i]);
                                   for (std::size_t j = 0; j < k; ++j) local[i * 6 + j] += w * dotp(tg, g[j]);
                               }
                           });
}

CsrMatrix assemble_boundary_mass(const FnSpace& space) {
    const Mesh& mesh = space.mesh();
    const EdgeRule& rule = edge_rule(space.degree());
    const std::size_t k = space.dofs_per_element();
    std::vector<Triplet> trip;
    std::array<double, 6> phi{};
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        const double len = edge_length(mesh, e);
        const auto dofs = space.element_dofs(e.triangle);
        for (std::size_t q = 0; q < rule.s.size(); ++q) {
            space.basis(edge_bary(e.local_edge, rule.s[q]), phi);
            const double w = rule.weights[q] * len;
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j)
                    if (phi[i] != 0.0 && phi[j] != 0.0) trip.push_back({dofs[i], dofs[j], w * phi[i] * phi[j]});
        }
    }
    return CsrMatrix::from_triplets(space.size(), space.size(), std::move(trip));
}

namespace {
void check_form(const EllipticForm& f) {
    if (!f.theta.is_spd()) {
        std::ostringstream os;
        os << "elliptic form: Theta = [[" << f.theta.xx << ", " << f.theta.xy << "], [" << f.theta.xy << ", "
           << f.theta.yy << "]] is not symmetric positive definite";
        throw InvalidArgument(os.str());
    }
    if (f.gamma < 0 || f.delta < 0 || f.beta < 0)
        throw InvalidArgument("elliptic form: gamma, delta and beta must be non-negative");
}
}  // namespace

CsrMatrix assemble_elliptic(const FnSpace& space, const EllipticForm& form) {
    check_form(form);
    const std::size_t k = space.dofs_per_element();
    CsrMatrix a = assemble_volume(space, [&](std::size_t, std::size_t, double w, const auto& phi, const auto& g,
                                             auto& local) {
        for (std::size_t i = 0; i < k; ++i) {
            const Point tg = form.theta.apply(g[i]);
            for (std::size_t j = 0; j < k; ++j)
                local[i * 6 + j] += form.gamma * (w * dotp(tg, g[j])) + form.delta * (w * phi[i] * phi[j]);
        }
    });
    if (form.beta == 0.0) return a;
    return a.add(1.0, assemble_boundary_mass(space), form.beta);
}

CsrMatrix assemble_weighted_stiffness(const FnSpace& space, std::span<const double> weight) {
    const std::size_t nq = triangle_rule(space.degree()).size();
    if (weight.size() != space.mesh().num_triangles() * nq)
        throw InvalidArgument("assemble_weighted_stiffness: expected one weight per quadrature point");
    for (std::size_t i = 0; i < weight.size(); ++i)
        if (!(weight[i] >= 0.0))
            throw InvalidArgument("assemble_weighted_stiffness: negative weight at quadrature point " +
                                  std::to_string(i));
    const std::size_t k = space.dofs_per_element();
    return assemble_volume(space, [&](std::size_t t, std::size_t q, double w, const auto&, const auto& g, auto& local) {
        const double c = w * weight[t * nq + q];
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) local[i * 6 + j] += c * dotp(g[i], g[j]);
    });
}

Vec assemble_load(const FnSpace& space, const std::function<double(double, double)>& f) {
    const Mesh& mesh = space.mesh();
    const QuadratureRule& rule = triangle_rule(space.degree());
    Vec b(space.size(), 0.0);
    std::array<double, 6> phi{};
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto dofs = space.element_dofs(t);
        const double area = mesh.area(t);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point x = mesh.map(t, rule.bary[q]);
            space.basis(rule.bary[q], phi);
            const double fw = f(x.x, x.y) * rule.weights[q] * area;
            for (std::size_t i = 0; i < dofs.size(); ++i) b[dofs[i]] += fw * phi[i];
        }
    }
    return b;
}

Vec assemble_boundary_load(const FnSpace& space, BoundaryTag tag, const std::function<double(double, double)>& h) {
    const Mesh& mesh = space.mesh();
    const EdgeRule& rule = edge_rule(space.degree());
    Vec b(space.size(), 0.0);
    std::array<double, 6> phi{};
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        if (e.tag != tag) continue;
        const double len = edge_length(mesh, e);
        const auto dofs = space.element_dofs(e.triangle);
        for (std::size_t q = 0; q < rule.s.size(); ++q) {
            const auto bary = edge_bary(e.local_edge, rule.s[q]);
            const Point x = mesh.map(e.triangle, bary);
            space.basis(bary, phi);
            const double hw = h(x.x, x.y) * rule.weights[q] * len;
            for (std::size_t i = 0; i < dofs.size(); ++i) b[dofs[i]] += hw * phi[i];
        }
    }
    return b;
}

CsrMatrix assemble_advection(const FnSpace& space, std::span<const Point> velocity) {
    check_velocity(space, velocity);
    const std::size_t k = space.dofs_per_element();
    return assemble_volume(space, [&](std::size_t t, std::size_t, double w, const auto& phi, const auto& g,
                                      auto& local) {
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) local[i * 6 + j] += w * phi[i] * dotp(velocity[t], g[j]);
    });
}

CsrMatrix assemble_gls(const FnSpace& space, std::span<const Point> velocity, double kappa) {
    check_velocity(space, velocity);
    const Mesh& mesh = space.mesh();
    std::vector<double> tau(mesh.num_triangles());
    for (std::size_t t = 0; t < tau.size(); ++t) {
        const double h = mesh.diameter(t);
        const double speed = std::hypot(velocity[t].x, velocity[t].y);
        const double inv = 4 * kappa / (h * h) + 2 * speed / h;
        tau[t] = inv > 0 ? 1.0 / inv : 0.0;
    }
    const std::size_t k = space.dofs_per_element();
    return assemble_volume(space, [&](std::size_t t, std::size_t, double w, const auto&, const auto& g, auto& local) {
        for (std::size_t i = 0; i < k; ++i) {
            const double vi = dotp(velocity[t], g[i]);
            for (std::size_t j = 0; j < k; ++j) local[i * 6 + j] += w * tau[t] * vi * dotp(velocity[t], g[j]);
        }
    });
}

CsrMatrix rect_factor_mass(const FnSpace& space) {
    const Mesh& mesh = space.mesh();
    const QuadratureRule& rule = triangle_rule(space.degree());
    const std::size_t nq = rule.size();
    std::vector<Triplet> trip;
    std::array<double, 6> phi{};
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto dofs = space.element_dofs(t);
        const double area = mesh.area(t);
        for (std::size_t q = 0; q < nq; ++q) {
            space.basis(rule.bary[q], phi);
            const double sw = std::sqrt(rule.weights[q] * area);
            for (std::size_t i = 0; i < dofs.size(); ++i)
                if (phi[i] != 0.0) trip.push_back({dofs[i], t * nq + q, sw * phi[i]});
        }
    }
    return CsrMatrix::from_triplets(space.size(), mesh.num_triangles() * nq, std::move(trip));
}

CsrMatrix rect_factor_elliptic(const FnSpace& space, const EllipticForm& form) {
    check_form(form);
    const Mesh& mesh = space.mesh();
    const QuadratureRule& rule = triangle_rule(space.degree());
    const EdgeRule& erule = edge_rule(space.degree());
    const std::size_t nq = rule.size();
    const Tensor2 root = form.theta.sqrt();
    std::vector<Triplet> trip;
    std::array<double, 6> phi{};
    std::array<Point, 6> grad{};
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto dofs = space.element_dofs(t);
        const double area = mesh.area(t);
        for (std::size_t q = 0; q < nq; ++q) {
            space.basis(rule.bary[q], phi);
            space.basis_gradients(t, rule.bary[q], grad);
            const double w = rule.weights[q] * area;
            const double sg = std::sqrt(form.gamma * w), sd = std::sqrt(form.delta * w);
            const std::size_t col = 3 * (t * nq + q);
            for (std::size_t i = 0; i < dofs.size(); ++i) {
                const Point rg = root.apply(grad[i]);
                if (sg * rg.x != 0.0) trip.push_back({dofs[i], col, sg * rg.x});
                if (sg * rg.y != 0.0) trip.push_back({dofs[i], col + 1, sg * rg.y});
                if (sd * phi[i] != 0.0) trip.push_back({dofs[i], col + 2, sd * phi[i]});
            }
        }
    }
    std::size_t cols = 3 * mesh.num_triangles() * nq;
    if (form.beta > 0.0) {
        for (const BoundaryEdge& e : mesh.boundary_edges()) {
            const double len = edge_length(mesh, e);
            const auto dofs = space.element_dofs(e.triangle);
            for (std::size_t q = 0; q < erule.s.size(); ++q, ++cols) {
                space.basis(edge_bary(e.local_edge, erule.s[q]), phi);
                const double sb = std::sqrt(form.beta * erule.weights[q] * len);
                for (std::size_t i = 0; i < dofs.size(); ++i)
                    if (phi[i] != 0.0) trip.push_back({dofs[i], cols, sb * phi[i]});
            }
        }
    }
    return CsrMatrix::from_triplets(space.size(), cols, std::move(trip));
}

CsrMatrix point_observation(const FnSpace& space, std::span<const Point> points) {
    std::vector<Triplet> trip;
    std::array<double, 6> phi{};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto loc = space.mesh().locate(points[i]);
        if (!loc) {
            std::ostringstream os;
            os << "observation point " << i << " (" << points[i].x << ", " << points[i].y
               << ") lies outside the domain";
            throw InvalidArgument(os.str());
        }
        space.basis(loc->bary, phi);
        const auto dofs = space.element_dofs(loc->triangle);
        for (std::size_t k = 0; k < dofs.size(); ++k)
            if (phi[k] != 0.0) trip.push_back({i, dofs[k], phi[k]});
    }
    return CsrMatrix::from_triplets(points.size(), space.size(), std::move(trip));
}

CsrMatrix interpolation_matrix(const FnSpace& from, const FnSpace& to) {
    if (&from.mesh() != &to.mesh()) throw InvalidArgument("interpolation_matrix: spaces must share a mesh");
    // Local nodes of the target element in barycentric coordinates.
    const std::array<std::array<double, 3>, 6> nodes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                                      {0.5, 0.5, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}}};
    std::vector<bool> done(to.size(), false);
    std::vector<Triplet> trip;
    std::array<double, 6> phi{};
    for (std::size_t t = 0; t < to.mesh().num_triangles(); ++t) {
        const auto tdofs = to.element_dofs(t);
        const auto fdofs = from.element_dofs(t);
        for (std::size_t a = 0; a < tdofs.size(); ++a) {
            if (done[tdofs[a]]) continue;
            done[tdofs[a]] = true;
            from.basis(nodes[a], phi);
            for (std::size_t b = 0; b < fdofs.size(); ++b)
                if (phi[b] != 0.0) trip.push_back({tdofs[a], fdofs[b], phi[b]});
        }
    }
    return CsrMatrix::from_triplets(to.size(), from.size(), std::move(trip));
}

void apply_dirichlet(CsrMatrix& a, Vec& rhs, std::span<const std::size_t> dofs, std::span<const double> values) {
    const std::size_t n = a.rows();
    std::vector<char> fixed(n, 0);
    Vec g(n, 0.0);
    for (std::size_t k = 0; k < dofs.size(); ++k) {
        fixed[dofs[k]] = 1;
        g[dofs[k]] = values[k];
    }
    const Vec ag = a.multiply(g);
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    auto v = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        if (!fixed[i]) rhs[i] -= ag[i];
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
            if (fixed[i] || fixed[ci[k]]) v[k] = (i == ci[k]) ? 1.0 : 0.0;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (fixed[i]) {
            if (a.at(i, i) != 1.0) throw InvalidArgument("apply_dirichlet: missing diagonal entry");
            rhs[i] = g[i];
        }
}

void apply_dirichlet(CsrMatrix& a, Vec& rhs, const FnSpace& space, BoundaryTag tag,
                     const std::function<double(double, double)>& value) {
    const auto dofs = space.boundary_dofs(tag);
    if (dofs.empty()) throw InvalidArgument("apply_dirichlet: no boundary dofs tagged '" +
                                            std::string(to_string(tag)) + "'");
    Vec g(dofs.size());
    for (std::size_t k = 0; k < dofs.size(); ++k) g[k] = value(space.dof_coords()[dofs[k]].x, space.dof_coords()[dofs[k]].y);
    apply_dirichlet(a, rhs, dofs, g);
}

}  // namespace pdeinv
