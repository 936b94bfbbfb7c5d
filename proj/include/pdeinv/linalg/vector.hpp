#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pdeinv {

using Vec = std::vector<double>;

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x) {
    for (auto& v : x) v *= a;
}

inline Vec operator+(const Vec& a, const Vec& b) {
    Vec r(a);
    axpy(1.0, b, r);
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    Vec r(a);
    axpy(-1.0, b, r);
    return r;
}

inline Vec operator*(double s, const Vec& a) {
    Vec r(a);
    scale(s, r);
    return r;
}

inline bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace pdeinv
