#pragma once

// Spherical geometry for equirectangular rasters: pixel <-> unit sphere
// projections, cosine dissimilarity, great-circle sampling and the
// latitude-dependent search window.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sphsps/errors.hpp"

namespace sphsps {

inline constexpr double kPi = std::numbers::pi;

struct PixelCoord {
    int x = 0;
    int y = 0;
    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Point of the acquisition space. Not forced to unit norm; the
/// operations below check it where the math requires it.
struct SpherePoint {
    double xa = 0.0;
    double ya = 0.0;
    double za = 0.0;

    constexpr SpherePoint operator+(const SpherePoint& o) const { return {xa + o.xa, ya + o.ya, za + o.za}; }
    constexpr SpherePoint operator-(const SpherePoint& o) const { return {xa - o.xa, ya - o.ya, za - o.za}; }
    constexpr SpherePoint operator*(double s) const { return {xa * s, ya * s, za * s}; }
    constexpr SpherePoint operator-() const { return {-xa, -ya, -za}; }
    SpherePoint& operator+=(const SpherePoint& o) {
        xa += o.xa;
        ya += o.ya;
        za += o.za;
        return *this;
    }
    friend bool operator==(const SpherePoint&, const SpherePoint&) = default;
};

constexpr double dot(const SpherePoint& a, const SpherePoint& b) { return a.xa * b.xa + a.ya * b.ya + a.za * b.za; }

constexpr SpherePoint cross(const SpherePoint& a, const SpherePoint& b) {
    return {a.ya * b.za - a.za * b.ya, a.za * b.xa - a.xa * b.za, a.xa * b.ya - a.ya * b.xa};
}

inline double norm(const SpherePoint& a) { return std::sqrt(dot(a, a)); }

inline SpherePoint normalized(const SpherePoint& a) { return a * (1.0 / norm(a)); }

inline bool is_unit(const SpherePoint& a, double tol) { return std::abs(norm(a) - 1.0) <= tol; }

// Floor with a tolerance for values that should be integers but come back
// from trig round trips as k - 1e-13.
inline constexpr double kFloorSlack = 1e-9;

inline void check_frame(int w, int h) {
    if (h < 1 || w != 2 * h)
        throw DomainError("equirectangular frame must satisfy w = 2h, got " + std::to_string(w) + "x" +
                          std::to_string(h));
}

inline bool in_bounds(PixelCoord p, int w, int h) { return p.x >= 0 && p.x < w && p.y >= 0 && p.y < h; }

/// Equirectangular pixel to unit sphere. Row 0 is the north pole (za = 1).
inline SpherePoint pixel_to_sphere(PixelCoord p, int w, int h) {
    check_frame(w, h);
    if (!in_bounds(p, w, h))
        throw DomainError("pixel (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside frame");
    const double phi = p.y * kPi / h;
    const double theta = 2.0 * p.x * kPi / w;
    const double s = std::sin(phi);
    return {s * std::cos(theta), s * std::sin(theta), std::cos(phi)};
}

namespace detail {

// Inverse projection without argument checks, for inner loops.
inline PixelCoord sphere_to_pixel_fast(const SpherePoint& s, int w, int h) {
    const double polar = std::atan2(std::hypot(s.xa, s.ya), s.za);  // == arccos(za) on the unit sphere
    int y = static_cast<int>(std::floor(polar * h / kPi + kFloorSlack));
    y = std::clamp(y, 0, h - 1);
    // Adding +0.0 turns -0.0 into +0.0, so both poles land on column 0.
    int x = static_cast<int>(std::floor(std::atan2(s.ya + 0.0, s.xa + 0.0) * w / (2.0 * kPi) + kFloorSlack));
    x %= w;
    if (x < 0) x += w;
    return {x, y};
}

}  // namespace detail

/// Unit sphere to equirectangular pixel, columns reduced modulo w.
inline PixelCoord sphere_to_pixel(const SpherePoint& s, int w, int h) {
    check_frame(w, h);
    if (!is_unit(s, 1e-6)) throw DomainError("sphere_to_pixel: input is not unit-norm");
    return detail::sphere_to_pixel_fast(s, w, h);
}

/// d_s = 1 - <a, b>, in [0, 2] for unit inputs.
inline double cosine_dissimilarity(const SpherePoint& a, const SpherePoint& b) {
    return std::clamp(1.0 - dot(a, b), 0.0, 2.0);
}

/// Great-circle angle between unit vectors, in [0, pi].
inline double geodesic_angle(const SpherePoint& p, const SpherePoint& c) {
    return std::acos(std::clamp(dot(p, c), -1.0, 1.0));
}

/// Unit vector c* orthogonal to p inside span{p, c} (one Gram-Schmidt step).
inline SpherePoint orthogonal_frame(const SpherePoint& p, const SpherePoint& c) {
    const double d = dot(p, c);
    if (std::abs(d) >= 1.0 - 1e-12) throw DegenerateError("orthogonal_frame: collinear inputs");
    const SpherePoint r = c - p * d;
    const double n = norm(r);
    if (n <= 1e-15) throw DegenerateError("orthogonal_frame: collinear inputs");
    return r * (1.0 / n);
}

/// Deterministic unit vector orthogonal to p: cross with the axis of p's
/// smallest-magnitude component.
inline SpherePoint any_orthogonal(const SpherePoint& p) {
    const double ax = std::abs(p.xa), ay = std::abs(p.ya), az = std::abs(p.za);
    SpherePoint axis{0, 0, 1};
    if (ax <= ay && ax <= az)
        axis = {1, 0, 0};
    else if (ay <= az)
        axis = {0, 1, 0};
    return normalized(cross(p, axis));
}

struct GeodesicPath {
    std::vector<PixelCoord> points;
    double angle = 0.0;
};

/// Sphere points cos(a_k) p + sin(a_k) c*, a_k = k * alpha / (N - 1).
inline std::vector<SpherePoint> geodesic_sphere_points(const SpherePoint& p, const SpherePoint& c_star, double alpha,
                                                       int n) {
    if (n < 2) throw ParameterError("geodesic path needs N >= 2 samples");
    std::vector<SpherePoint> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double a = alpha * k / (n - 1);
        out.push_back(p * std::cos(a) + c_star * std::sin(a));
    }
    return out;
}

/// Samples the great-circle arc from p toward c (c_star from orthogonal_frame)
/// and projects every sample back to the raster.
inline GeodesicPath sample_geodesic(const SpherePoint& p, const SpherePoint& c_star, double alpha, int n, int w,
                                    int h) {
    check_frame(w, h);
    GeodesicPath path;
    path.angle = alpha;
    for (const auto& s : geodesic_sphere_points(p, c_star, alpha, n))
        path.points.push_back(detail::sphere_to_pixel_fast(s, w, h));
    return path;
}

/// Frame construction plus sampling, with the coincident/antipodal fallbacks.
inline GeodesicPath geodesic_path(const SpherePoint& p, const SpherePoint& c, int n, int w, int h) {
    const double d = dot(p, c);
    if (d >= 1.0 - 1e-12) return sample_geodesic(p, any_orthogonal(p), 0.0, n, w, h);
    if (d <= -1.0 + 1e-12) return sample_geodesic(p, any_orthogonal(p), kPi, n, w, h);
    return sample_geodesic(p, orthogonal_frame(p, c), geodesic_angle(p, c), n, w, h);
}

/// Textbook slerp, kept as an independent reference for the sampler.
inline SpherePoint slerp_reference(const SpherePoint& p, const SpherePoint& c, double t) {
    const double alpha = geodesic_angle(p, c);
    const double s = std::sin(alpha);
    if (alpha > kPi - 1e-9) throw DegenerateError("slerp_reference: antipodal inputs");
    if (s < 1e-15) return p;
    return (p * std::sin((1.0 - t) * alpha) + c * std::sin(t * alpha)) * (1.0 / s);
}

/// Average superpixel size S = w / sqrt(K pi).
inline double superpixel_size(int w, int k) { return w / std::sqrt(static_cast<double>(k) * kPi); }

struct RowSpan {
    int y = 0;
    int x0 = 0;     // first column, already reduced into [0, w)
    int count = 0;  // columns x0, x0+1, ... modulo w
    bool wraps(int w) const { return x0 + count > w; }
};

struct SearchWindow {
    int y0 = 0;
    int y1 = -1;  // inclusive
    std::vector<RowSpan> rows;

    std::size_t pixel_count() const {
        std::size_t n = 0;
        for (const auto& r : rows) n += static_cast<std::size_t>(r.count);
        return n;
    }
};

/// Search area around barycenter pixel b: +-S rows, +-S/sin(phi) columns per
/// row, with horizontal wrap. sin(phi) is floored at 2S/w so polar rows are
/// covered entirely.
inline SearchWindow search_window(PixelCoord b, double s, int w, int h) {
    check_frame(w, h);
    SearchWindow win;
    win.y0 = std::max(0, static_cast<int>(std::ceil(b.y - s)));
    win.y1 = std::min(h - 1, static_cast<int>(std::floor(b.y + s)));
    const double min_sin = 2.0 * s / w;
    for (int y = win.y0; y <= win.y1; ++y) {
        const double sin_phi = std::max(std::sin(y * kPi / h), min_sin);
        const double half = s / sin_phi;
        RowSpan row{y, 0, w};
        if (half < w / 2.0) {
            const int lo = static_cast<int>(std::ceil(b.x - half));
            const int hi = static_cast<int>(std::floor(b.x + half));
            row.count = std::min(w, hi - lo + 1);
            row.x0 = ((lo % w) + w) % w;
        }
        win.rows.push_back(row);
    }
    return win;
}

}  // namespace sphsps
