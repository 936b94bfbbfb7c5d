#include "pdeinv/fem/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "pdeinv/error.hpp"

namespace pdeinv {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

void write_field(const std::filesystem::path& path, std::span<const Point> points,
                 const std::vector<std::span<const double>>& columns) {
    for (const auto& c : columns)
        if (c.size() != points.size()) throw InvalidArgument("write_field: column length differs from point count");
    std::ofstream out = open_out(path);
    for (std::size_t i = 0; i < points.size(); ++i) {
        out << format_double(points[i].x) << ' ' << format_double(points[i].y);
        for (const auto& c : columns) out << ' ' << format_double(c[i]);
        out << '\n';
    }
}

void write_field(const std::filesystem::path& path, std::span<const Point> points, std::span<const double> values) {
    write_field(path, points, std::vector<std::span<const double>>{values});
}

FieldFile read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open field file '" + path.string() + "'");
    FieldFile f;
    std::string line;
    std::size_t lineno = 0, ncols = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> vals;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
            if (p == end) break;
            double v = 0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc())
                throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": malformed number");
            vals.push_back(v);
            p = res.ptr;
        }
        if (vals.size() < 3)
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected `x y value...`");
        if (f.points.empty()) {
            ncols = vals.size() - 2;
            f.columns.assign(ncols, {});
        } else if (vals.size() - 2 != ncols) {
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": inconsistent column count");
        }
        f.points.push_back({vals[0], vals[1]});
        for (std::size_t c = 0; c < ncols; ++c) f.columns[c].push_back(vals[2 + c]);
    }
    return f;
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
    std::ofstream out = open_out(path);
    out << "vertices " << mesh.num_vertices() << '\n';
    for (const Point& p : mesh.vertices()) out << format_double(p.x) << ' ' << format_double(p.y) << '\n';
    out << "triangles " << mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace pdeinv
