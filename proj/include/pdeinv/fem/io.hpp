#pragma once

// Plain-text exports. A field file has one line per dof, `x y v1 [v2 ...]`,
// whitespace separated with '.' decimals; lines starting with '#' are comments.
// A mesh file lists `vertices N`, N lines `x y`, `triangles T`, T lines `a b c`.

#include <filesystem>
#include <span>
#include <vector>

#include "pdeinv/fem/mesh.hpp"
#include "pdeinv/linalg/vector.hpp"

namespace pdeinv {

struct FieldFile {
    std::vector<Point> points;
    std::vector<Vec> columns;
};

void write_field(const std::filesystem::path& path, std::span<const Point> points,
                 const std::vector<std::span<const double>>& columns);
void write_field(const std::filesystem::path& path, std::span<const Point> points, std::span<const double> values);
/// Throws InvalidArgument with the offending line number on malformed input.
FieldFile read_field(const std::filesystem::path& path);

void write_mesh(const std::filesystem::path& path, const Mesh& mesh);

/// Shortest round-trip decimal representation, locale independent.
std::string format_double(double v);

}  // namespace pdeinv
