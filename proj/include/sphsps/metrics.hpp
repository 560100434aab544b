#pragma once

// Segmentation quality measures on equirectangular label maps. Horizontal
// adjacency wraps around the seam everywhere in this file.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "sphsps/connectivity.hpp"
#include "sphsps/errors.hpp"
#include "sphsps/geometry.hpp"
#include "sphsps/image.hpp"

namespace sphsps {

using BinaryMap = Raster<std::uint8_t, 1>;

/// Achievable segmentation accuracy: area share of each superpixel's best
/// overlapping ground-truth object.
inline double asa(const LabelMap& labels, const GroundTruth& gt) {
    require_same_shape(labels, gt, "asa");
    if (labels.empty()) return 1.0;
    std::unordered_map<std::uint64_t, std::int64_t> overlap;
    overlap.reserve(labels.size() / 8 + 16);
    for (std::size_t q = 0; q < labels.size(); ++q) {
        const auto key = static_cast<std::uint64_t>(static_cast<std::uint32_t>(labels[q])) << 32 |
                         static_cast<std::uint32_t>(gt[q]);
        ++overlap[key];
    }
    std::unordered_map<std::uint32_t, std::int64_t> best;
    for (const auto& [key, n] : overlap) {
        auto& b = best[static_cast<std::uint32_t>(key >> 32)];
        b = std::max(b, n);
    }
    std::int64_t total = 0;
    for (const auto& [lab, n] : best) total += n;
    return static_cast<double>(total) / static_cast<double>(labels.size());
}

/// Pixels with at least one 4-neighbor (wrapping horizontally) of another label.
template <typename T>
BinaryMap boundary_map(const Raster<T, 1>& labels) {
    const int w = labels.width(), h = labels.height();
    BinaryMap out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto l = labels(x, y);
            bool edge = false;
            for_each_neighbor4(x, y, w, h, [&](int nx, int ny) { edge |= labels(nx, ny) != l; });
            out(x, y) = edge ? 1 : 0;
        }
    }
    return out;
}

namespace detail {

/// Marks every pixel within Euclidean distance < eps of a set pixel, with
/// horizontal wrap.
inline BinaryMap dilate_within(const BinaryMap& map, double eps) {
    const int w = map.width(), h = map.height();
    BinaryMap out(w, h, 0);
    if (eps <= 0.0) return out;
    const int r = static_cast<int>(std::ceil(eps));
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy < eps * eps) offsets.emplace_back(dx, dy);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!map(x, y)) continue;
            for (auto [dx, dy] : offsets) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                const int xx = ((x + dx) % w + w) % w;
                out(xx, yy) = 1;
            }
        }
    }
    return out;
}

inline std::size_t count_set(const BinaryMap& m) {
    return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](auto v) { return v != 0; }));
}

/// Fraction of `targets` pixels lying within eps of a `detected` pixel; 1 if
/// there are no targets.
inline double matched_fraction(const BinaryMap& targets, const BinaryMap& detected, double eps) {
    const auto near = dilate_within(detected, eps);
    std::size_t total = 0, hit = 0;
    for (std::size_t q = 0; q < targets.size(); ++q) {
        if (!targets[q]) continue;
        ++total;
        hit += near[q] ? 1 : 0;
    }
    return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace detail

inline constexpr double kDefaultBoundaryEpsilon = 2.0;

/// Share of ground-truth boundary pixels with a superpixel boundary pixel
/// closer than eps.
inline double boundary_recall(const LabelMap& labels, const GroundTruth& gt, double eps = kDefaultBoundaryEpsilon) {
    require_same_shape(labels, gt, "boundary_recall");
    return detail::matched_fraction(boundary_map(gt), boundary_map(labels), eps);
}

/// Share of image pixels that are superpixel boundary pixels.
inline double contour_density(const LabelMap& labels) {
    if (labels.empty()) return 0.0;
    return static_cast<double>(detail::count_set(boundary_map(labels))) / static_cast<double>(labels.size());
}

struct PrSample {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

inline std::vector<double> default_pr_thresholds() {
    std::vector<double> t;
    for (int i = 1; i <= 99; ++i) t.push_back(i / 100.0);
    return t;
}

/// Mean of the boundary maps of several segmentations, in [0, 1].
inline Raster<double, 1> contour_probability(const std::vector<LabelMap>& label_maps) {
    if (label_maps.empty()) throw ParameterError("contour_probability: need at least one label map");
    Raster<double, 1> prob(label_maps.front().width(), label_maps.front().height(), 0.0);
    for (const auto& lm : label_maps) {
        require_same_shape(lm, prob, "contour_probability");
        const auto b = boundary_map(lm);
        for (std::size_t q = 0; q < prob.size(); ++q) prob[q] += b[q];
    }
    for (auto& v : prob.data()) v /= static_cast<double>(label_maps.size());
    return prob;
}

/// PR samples of a contour probability map. A pixel is detected when its
/// probability is strictly above the threshold. Empty detection has
/// precision 1 by convention.
inline std::vector<PrSample> pr_curve(const Raster<double, 1>& prob, const GroundTruth& gt,
                                      const std::vector<double>& thresholds, double eps = kDefaultBoundaryEpsilon) {
    require_same_shape(prob, gt, "pr_curve");
    const auto gt_boundary = boundary_map(gt);
    const auto gt_near = detail::dilate_within(gt_boundary, eps);
    std::vector<PrSample> out;
    out.reserve(thresholds.size());
    BinaryMap detected(prob.width(), prob.height());
    for (double t : thresholds) {
        std::size_t ndet = 0, precise = 0;
        for (std::size_t q = 0; q < prob.size(); ++q) {
            detected[q] = prob[q] > t ? 1 : 0;
            if (detected[q]) {
                ++ndet;
                precise += gt_near[q] ? 1 : 0;
            }
        }
        PrSample s;
        s.threshold = t;
        s.precision = ndet == 0 ? 1.0 : static_cast<double>(precise) / static_cast<double>(ndet);
        s.recall = ndet == 0 && detail::count_set(gt_boundary) > 0
                       ? 0.0
                       : detail::matched_fraction(gt_boundary, detected, eps);
        out.push_back(s);
    }
    return out;
}

inline std::vector<PrSample> pr_curve(const std::vector<LabelMap>& label_maps, const GroundTruth& gt,
                                      const std::vector<double>& thresholds, double eps = kDefaultBoundaryEpsilon) {
    return pr_curve(contour_probability(label_maps), gt, thresholds, eps);
}

inline double f_measure(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline double max_f(const std::vector<PrSample>& samples) {
    if (samples.empty()) throw ParameterError("max_f: no PR samples");
    double best = 0.0;
    for (const auto& s : samples) best = std::max(best, f_measure(s.precision, s.recall));
    return best;
}

// ---------------------------------------------------------------------------
// Spherical area, perimeter and compactness.

namespace detail {

/// Continuous pixel coordinates (x, y) to the unit sphere.
inline SpherePoint grid_to_sphere(double x, double y, int w, int h) {
    const double phi = std::clamp(y * kPi / h, 0.0, kPi);
    const double th = 2.0 * kPi * x / w;
    const double s = std::sin(phi);
    return {s * std::cos(th), s * std::sin(th), std::cos(phi)};
}

inline double arc_length(const SpherePoint& a, const SpherePoint& b) {
    // 2 asin(chord / 2) stays accurate for short arcs.
    return 2.0 * std::asin(std::min(1.0, norm(a - b) / 2.0));
}

/// Marching-squares segments of one 2x2 cell, as pairs of edge ids
/// (0 top, 1 right, 2 bottom, 3 left). Inside bits: 1 TL, 2 TR, 4 BR, 8 BL.
/// Diagonal cases keep the two inside corners separate.
inline int cell_segments(int code, std::array<std::pair<int, int>, 2>& segs) {
    switch (code) {
        case 1: case 14: segs[0] = {0, 3}; return 1;
        case 2: case 13: segs[0] = {0, 1}; return 1;
        case 4: case 11: segs[0] = {1, 2}; return 1;
        case 8: case 7:  segs[0] = {2, 3}; return 1;
        case 3: case 12: segs[0] = {3, 1}; return 1;
        case 6: case 9:  segs[0] = {0, 2}; return 1;
        case 5:  segs[0] = {0, 3}; segs[1] = {1, 2}; return 2;
        case 10: segs[0] = {0, 1}; segs[1] = {2, 3}; return 2;
        default: return 0;
    }
}

/// Edge midpoint of the cell with top-left corner (x, y).
inline std::pair<double, double> edge_midpoint(int edge, double x, double y) {
    switch (edge) {
        case 0: return {x + 0.5, y};
        case 1: return {x + 1.0, y + 0.5};
        case 2: return {x + 0.5, y + 1.0};
        default: return {x, y + 0.5};
    }
}

}  // namespace detail

struct AreaPerimeter {
    double area = 0.0;       // steradians
    double perimeter = 0.0;  // radians of great-circle arc
};

/// Per-label spherical area (sin(phi)-weighted pixel sum) and perimeter
/// (marching-squares contour through pixel centers, arcs measured on the
/// sphere). Indexed by label id; labels must be non-negative.
inline std::vector<AreaPerimeter> spherical_area_perimeter_all(const LabelMap& labels) {
    const int w = labels.width(), h = labels.height();
    std::int32_t max_label = -1;
    for (auto l : labels.data()) {
        if (l < 0) throw ParameterError("spherical measures need non-negative labels");
        max_label = std::max(max_label, l);
    }
    std::vector<AreaPerimeter> out(static_cast<std::size_t>(max_label + 1));
    const double cell = (kPi / h) * (2.0 * kPi / w);
    for (int y = 0; y < h; ++y) {
        const double a = std::sin(y * kPi / h) * cell;
        for (int x = 0; x < w; ++x) out[labels(x, y)].area += a;
    }
    std::array<std::pair<int, int>, 2> segs;
    for (int y = 0; y + 1 < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x1 = x + 1 == w ? 0 : x + 1;
            const std::array<std::int32_t, 4> c{labels(x, y), labels(x1, y), labels(x1, y + 1), labels(x, y + 1)};
            if (c[0] == c[1] && c[1] == c[2] && c[2] == c[3]) continue;
            for (int i = 0; i < 4; ++i) {
                bool seen = false;
                for (int j = 0; j < i; ++j) seen |= c[j] == c[i];
                if (seen) continue;
                int code = 0;
                for (int j = 0; j < 4; ++j) code |= (c[j] == c[i] ? 1 : 0) << j;
                const int n = detail::cell_segments(code, segs);
                for (int s = 0; s < n; ++s) {
                    const auto [ax, ay] = detail::edge_midpoint(segs[s].first, x, y);
                    const auto [bx, by] = detail::edge_midpoint(segs[s].second, x, y);
                    out[c[i]].perimeter += detail::arc_length(detail::grid_to_sphere(ax, ay, w, h),
                                                              detail::grid_to_sphere(bx, by, w, h));
                }
            }
        }
    }
    return out;
}

/// Area and perimeter of one pixel set.
inline AreaPerimeter spherical_area_perimeter(const std::vector<PixelCoord>& pixels, int w, int h) {
    if (pixels.empty()) throw ParameterError("spherical_area_perimeter: empty pixel set");
    LabelMap mask(w, h, 0);
    for (auto p : pixels) {
        if (!in_bounds(p, w, h)) throw DomainError("pixel outside frame");
        mask(p.x, p.y) = 1;
    }
    return spherical_area_perimeter_all(mask)[1];
}

/// Spherical isoperimetric quotient (4 pi A - A^2) / P^2, clamped to [0, 1].
inline double isoperimetric_quotient(const AreaPerimeter& ap) {
    if (ap.perimeter <= 0.0) return 1.0;  // the whole sphere
    return std::clamp((4.0 * kPi * ap.area - ap.area * ap.area) / (ap.perimeter * ap.perimeter), 0.0, 1.0);
}

/// Area-weighted mean isoperimetric quotient over all superpixels.
inline double com(const LabelMap& labels) {
    double num = 0.0, den = 0.0;
    for (const auto& ap : spherical_area_perimeter_all(labels)) {
        if (ap.area <= 0.0) continue;
        num += isoperimetric_quotient(ap) * ap.area;
        den += ap.area;
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace sphsps
