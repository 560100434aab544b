#pragma once

// Shape regularity: SRC (convexity x contour smoothness x axis balance),
// SMF (consistency with the mean registered shape) and their area-weighted
// combination, either on image-space shapes (planar GR) or on shapes
// projected from the sphere onto their two principal axes (G-GR).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_set>
#include <vector>

#include "sphsps/errors.hpp"
#include "sphsps/geometry.hpp"
#include "sphsps/image.hpp"
#include "sphsps/metrics.hpp"

namespace sphsps {

/// Binary occupancy grid of a projected shape.
struct ShapeMask2D {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> cells;  // row-major
    double cell_size = 1.0;           // in projection units (radians for G-GR)
    double origin_u = 0.0;            // projection coordinates of cell (0, 0)
    double origin_v = 0.0;
    bool degenerate = false;

    ShapeMask2D() = default;
    ShapeMask2D(int w, int h) : width(w), height(h), cells(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t& at(int i, int j) { return cells[static_cast<std::size_t>(j) * width + i]; }
    std::uint8_t at(int i, int j) const { return cells[static_cast<std::size_t>(j) * width + i]; }
    bool get(int i, int j) const { return i >= 0 && j >= 0 && i < width && j < height && at(i, j); }
    std::size_t count() const { return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1)); }
};

namespace detail {

/// Crops to the bounding box of occupied cells.
inline ShapeMask2D crop(const ShapeMask2D& m) {
    int i0 = m.width, j0 = m.height, i1 = -1, j1 = -1;
    for (int j = 0; j < m.height; ++j)
        for (int i = 0; i < m.width; ++i)
            if (m.at(i, j)) {
                i0 = std::min(i0, i);
                i1 = std::max(i1, i);
                j0 = std::min(j0, j);
                j1 = std::max(j1, j);
            }
    if (i1 < 0) return ShapeMask2D{};
    ShapeMask2D out(i1 - i0 + 1, j1 - j0 + 1);
    out.cell_size = m.cell_size;
    out.origin_u = m.origin_u + i0 * m.cell_size;
    out.origin_v = m.origin_v + j0 * m.cell_size;
    out.degenerate = m.degenerate;
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) out.at(i - i0, j - j0) = m.at(i, j);
    return out;
}

/// 3x3 morphological closing; the grid is assumed to carry a 1-cell empty
/// border so dilation never leaves it.
inline ShapeMask2D close3x3(const ShapeMask2D& m) {
    ShapeMask2D dil = m, ero = m;
    for (int j = 0; j < m.height; ++j)
        for (int i = 0; i < m.width; ++i) {
            bool any = false;
            for (int dj = -1; dj <= 1 && !any; ++dj)
                for (int di = -1; di <= 1 && !any; ++di) any = m.get(i + di, j + dj);
            dil.at(i, j) = any ? 1 : 0;
        }
    for (int j = 0; j < m.height; ++j)
        for (int i = 0; i < m.width; ++i) {
            bool all = true;
            for (int dj = -1; dj <= 1 && all; ++dj)
                for (int di = -1; di <= 1 && all; ++di) {
                    all = dil.get(i + di, j + dj);
                }
            ero.at(i, j) = all ? 1 : 0;
        }
    return ero;
}

inline ShapeMask2D segment_mask(int n) {
    ShapeMask2D m(std::max(n, 1), 1);
    std::fill(m.cells.begin(), m.cells.end(), 1);
    m.degenerate = true;
    return m;
}

}  // namespace detail

/// Projects a superpixel onto the plane of its two principal axes in the
/// acquisition space and rasterizes it on a grid of ceil(2 sqrt(n)) cells
/// along its longest extent, n being the region's solid angle expressed in
/// mean-pixel units. Each pixel is splatted with enough sub-samples
/// to cover its footprint, then the mask is closed with a 3x3 element.
/// Nearly collinear sets fall back to a one-cell-thick segment of n cells.
inline ShapeMask2D project_shape(const std::vector<PixelCoord>& pixels, int w, int h) {
    const auto n = pixels.size();
    if (n < 3) return detail::segment_mask(static_cast<int>(n));

    std::vector<Eigen::Vector3d> pts;
    pts.reserve(n);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (auto p : pixels) {
        const auto s = pixel_to_sphere(p, w, h);
        pts.emplace_back(s.xa, s.ya, s.za);
        mean += pts.back();
    }
    mean /= static_cast<double>(n);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    cov /= static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
    Eigen::Vector3d axis_u = eig.eigenvectors().col(2);
    Eigen::Vector3d axis_v = eig.eigenvectors().col(1);
    // Deterministic orientation: largest-magnitude component positive.
    auto orient = [](Eigen::Vector3d& v) {
        Eigen::Index i;
        v.cwiseAbs().maxCoeff(&i);
        if (v[i] < 0) v = -v;
    };
    orient(axis_u);
    orient(axis_v);
    // Pixels along one great circle are coplanar rather than collinear; treat
    // a minor spread below a quarter pixel as a line.
    const double pix_v = kPi / h;
    if (evals[2] <= 0.0 || std::sqrt(std::max(evals[1], 0.0)) < 0.25 * pix_v)
        return detail::segment_mask(static_cast<int>(n));

    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    for (const auto& p : pts) {
        const double u = (p - mean).dot(axis_u), v = (p - mean).dot(axis_v);
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    // Size measured as solid angle in units of the mean pixel footprint, so
    // equal regions get equal grids regardless of latitude.
    double area = 0.0;
    for (auto p : pixels) {
        const double top = std::max(0.0, (p.y - 0.5) * pix_v), bottom = std::min(kPi, (p.y + 0.5) * pix_v);
        area += std::cos(top) - std::cos(bottom);
    }
    const double equiv = std::max(1.0, area * h / 2.0);
    const int m = static_cast<int>(std::ceil(2.0 * std::sqrt(equiv) - 1e-9));
    const double step = std::max(umax - umin, vmax - vmin) / m;
    if (!(step > 0.0)) return detail::segment_mask(static_cast<int>(n));

    // Resample the bilinearly interpolated membership of the region: member
    // pixels and their outer ring are sub-sampled finely enough that
    // neighboring samples are less than a cell apart (footprints are pi/h tall
    // and sin(phi) 2pi/w wide), and a cell is set when its samples average at
    // least one half. This keeps pixel staircases out of the finer grid.
    const auto key = [w](int x, int y) { return static_cast<std::int64_t>(y) * w + x; };
    std::unordered_set<std::int64_t> members;
    members.reserve(n * 2);
    for (auto p : pixels) members.insert(key(p.x, p.y));
    const auto member = [&](int x, int y) {
        y = std::clamp(y, 0, h - 1);
        x = ((x % w) + w) % w;
        return members.count(key(x, y)) ? 1.0 : 0.0;
    };
    std::vector<PixelCoord> support(pixels.begin(), pixels.end());
    std::unordered_set<std::int64_t> ring;
    for (auto p : pixels)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int y = p.y + dy, x = ((p.x + dx) % w + w) % w;
                if (y < 0 || y >= h || members.count(key(x, y)) || !ring.insert(key(x, y)).second) continue;
                support.push_back({x, y});
            }

    struct Sample {
        double u, v, value;
    };
    std::vector<Sample> samples;
    samples.reserve(support.size() * 4);
    for (auto p : support) {
        const double sin_phi = std::max(std::sin(p.y * kPi / h), 1e-12);
        const int ny = std::max(1, static_cast<int>(std::ceil(1.5 * pix_v / step)));
        const int nx = std::max(1, static_cast<int>(std::ceil(1.5 * sin_phi * 2.0 * kPi / w / step)));
        for (int sy = 0; sy < ny; ++sy) {
            const double yy = std::clamp(p.y + (sy + 0.5) / ny - 0.5, 0.0, static_cast<double>(h));
            const int y0 = static_cast<int>(std::floor(yy));
            const double fy = yy - y0;
            for (int sx = 0; sx < nx; ++sx) {
                const double xx = p.x + (sx + 0.5) / nx - 0.5;
                const int x0 = static_cast<int>(std::floor(xx));
                const double fx = xx - x0;
                const double value = (1 - fy) * ((1 - fx) * member(x0, y0) + fx * member(x0 + 1, y0)) +
                                     fy * ((1 - fx) * member(x0, y0 + 1) + fx * member(x0 + 1, y0 + 1));
                if (value <= 0.0) continue;
                const auto s = detail::grid_to_sphere(xx, yy, w, h);
                const Eigen::Vector3d d = Eigen::Vector3d(s.xa, s.ya, s.za) - mean;
                samples.push_back({d.dot(axis_u), d.dot(axis_v), value});
            }
        }
    }
    double su0 = 1e300, sv0 = 1e300, su1 = -1e300, sv1 = -1e300;
    for (const auto& sm : samples) {
        if (sm.value < 0.5) continue;
        su0 = std::min(su0, sm.u);
        sv0 = std::min(sv0, sm.v);
        su1 = std::max(su1, sm.u);
        sv1 = std::max(sv1, sm.v);
    }
    // M cells span the longer side of the shape; the shorter side is centered
    // so that mirrored axes give mirrored masks.
    const double cell = std::max(su1 - su0, sv1 - sv0) / m;
    if (!(cell > 0.0)) return detail::segment_mask(static_cast<int>(n));
    const int iw = std::max(1, static_cast<int>(std::ceil((su1 - su0) / cell - 1e-9)));
    const int ih = std::max(1, static_cast<int>(std::ceil((sv1 - sv0) / cell - 1e-9)));
    const double u0 = 0.5 * (su0 + su1) - 0.5 * iw * cell;
    const double v0 = 0.5 * (sv0 + sv1) - 0.5 * ih * cell;
    std::vector<double> sum(static_cast<std::size_t>(iw) * ih, 0.0);
    std::vector<int> hits(sum.size(), 0);
    for (const auto& sm : samples) {
        int i = static_cast<int>(std::floor((sm.u - u0) / cell));
        int j = static_cast<int>(std::floor((sm.v - v0) / cell));
        if (sm.value >= 0.5) {
            i = std::clamp(i, 0, iw - 1);
            j = std::clamp(j, 0, ih - 1);
        } else if (i < 0 || j < 0 || i >= iw || j >= ih) {
            continue;
        }
        const auto c = static_cast<std::size_t>(j) * iw + i;
        sum[c] += sm.value;
        ++hits[c];
    }
    ShapeMask2D grid(iw + 2, ih + 2);
    grid.cell_size = cell;
    grid.origin_u = u0 - cell;
    grid.origin_v = v0 - cell;
    for (int j = 0; j < ih; ++j)
        for (int i = 0; i < iw; ++i) {
            const auto c = static_cast<std::size_t>(j) * iw + i;
            if (hits[c] > 0 && sum[c] >= 0.5 * hits[c]) grid.at(i + 1, j + 1) = 1;
        }
    return detail::crop(detail::close3x3(grid));
}

// ---------------------------------------------------------------------------
// SRC

namespace detail {

struct Pt {
    double x, y;
};

inline double cross2(const Pt& o, const Pt& a, const Pt& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

/// Andrew's monotone chain; counter-clockwise, no collinear points.
inline std::vector<Pt> convex_hull(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Pt> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

inline double polygon_perimeter(const std::vector<Pt>& poly) {
    if (poly.size() < 2) return 0.0;
    double p = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        p += std::hypot(b.x - a.x, b.y - a.y);
    }
    return p;
}

inline bool inside_convex(const std::vector<Pt>& hull, const Pt& p) {
    if (hull.size() < 3) return false;
    for (std::size_t i = 0; i < hull.size(); ++i)
        if (cross2(hull[i], hull[(i + 1) % hull.size()], p) < -1e-9) return false;
    return true;
}

/// Length of the marching-squares contour of the mask (cell centers at
/// integer coordinates, zero outside).
inline double contour_length(const ShapeMask2D& m) {
    double length = 0.0;
    std::array<std::pair<int, int>, 2> segs;
    for (int j = -1; j < m.height; ++j) {
        for (int i = -1; i < m.width; ++i) {
            const int code = (m.get(i, j) ? 1 : 0) | (m.get(i + 1, j) ? 2 : 0) | (m.get(i + 1, j + 1) ? 4 : 0) |
                             (m.get(i, j + 1) ? 8 : 0);
            const int n = cell_segments(code, segs);
            for (int s = 0; s < n; ++s) {
                const auto [ax, ay] = edge_midpoint(segs[s].first, i, j);
                const auto [bx, by] = edge_midpoint(segs[s].second, i, j);
                length += std::hypot(bx - ax, by - ay);
            }
        }
    }
    return length;
}

}  // namespace detail

struct SrcFactors {
    double solidity = 0.0;
    double smoothness = 0.0;
    double balance = 0.0;
    double value() const { return solidity * smoothness * balance; }
};

/// Convexity (mask cells / cells of the discrete convex hull), smoothness
/// (hull contour length / mask contour length) and balance (ratio of principal standard
/// deviations of the cell footprints).
inline SrcFactors src_factors(const ShapeMask2D& mask) {
    const std::size_t count = mask.count();
    if (count == 0) throw ParameterError("src: empty mask");
    SrcFactors f;

    // Both factors are taken against the discrete convex hull: cells whose
    // centers lie in the hull of the set cell centers. Perimeters of the mask
    // and of its hull use the same contour estimator.
    std::vector<detail::Pt> centers;
    centers.reserve(count);
    for (int j = 0; j < mask.height; ++j)
        for (int i = 0; i < mask.width; ++i)
            if (mask.at(i, j)) centers.push_back({double(i), double(j)});
    const auto hull = detail::convex_hull(centers);
    ShapeMask2D hull_mask(mask.width, mask.height);
    for (int j = 0; j < mask.height; ++j)
        for (int i = 0; i < mask.width; ++i)
            hull_mask.at(i, j) = (mask.at(i, j) || detail::inside_convex(hull, {double(i), double(j)})) ? 1 : 0;
    f.solidity = std::min(1.0, static_cast<double>(count) / static_cast<double>(hull_mask.count()));
    const double contour = detail::contour_length(mask);
    f.smoothness = contour > 0.0 ? std::min(1.0, detail::contour_length(hull_mask) / contour) : 1.0;

    double mi = 0, mj = 0;
    for (int j = 0; j < mask.height; ++j)
        for (int i = 0; i < mask.width; ++i)
            if (mask.at(i, j)) {
                mi += i;
                mj += j;
            }
    mi /= count;
    mj /= count;
    double sii = 0, sjj = 0, sij = 0;
    for (int j = 0; j < mask.height; ++j)
        for (int i = 0; i < mask.width; ++i)
            if (mask.at(i, j)) {
                sii += (i - mi) * (i - mi);
                sjj += (j - mj) * (j - mj);
                sij += (i - mi) * (j - mj);
            }
    // A unit cell has variance 1/12 along each axis.
    sii = sii / count + 1.0 / 12.0;
    sjj = sjj / count + 1.0 / 12.0;
    sij /= count;
    const double tr = sii + sjj, det = sii * sjj - sij * sij;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double lmax = tr / 2.0 + disc, lmin = std::max(tr / 2.0 - disc, 0.0);
    f.balance = std::sqrt(lmin / lmax);
    return f;
}

inline double src(const ShapeMask2D& mask) { return src_factors(mask).value(); }

// ---------------------------------------------------------------------------
// SMF

/// Masks translated so their rounded barycenters share the center cell of a
/// common square grid.
struct RegisteredMasks {
    int size = 0;
    std::vector<std::vector<std::uint8_t>> grids;
};

inline RegisteredMasks register_masks(const std::vector<ShapeMask2D>& masks) {
    RegisteredMasks r;
    int extent = 1;
    for (const auto& m : masks) extent = std::max({extent, m.width, m.height});
    r.size = 2 * extent + 1;
    const int center = extent;
    for (const auto& m : masks) {
        double bi = 0, bj = 0;
        std::size_t n = 0;
        for (int j = 0; j < m.height; ++j)
            for (int i = 0; i < m.width; ++i)
                if (m.at(i, j)) {
                    bi += i;
                    bj += j;
                    ++n;
                }
        std::vector<std::uint8_t> g(static_cast<std::size_t>(r.size) * r.size, 0);
        if (n > 0) {
            const int oi = center - static_cast<int>(std::lround(bi / n));
            const int oj = center - static_cast<int>(std::lround(bj / n));
            for (int j = 0; j < m.height; ++j)
                for (int i = 0; i < m.width; ++i)
                    if (m.at(i, j)) g[static_cast<std::size_t>(j + oj) * r.size + (i + oi)] = 1;
        }
        r.grids.push_back(std::move(g));
    }
    return r;
}

/// SMF of each registered grid against the cell-wise mean of all of them:
/// 1 - 0.5 * L1 distance between the two normalized distributions.
inline std::vector<double> smf_registered(const std::vector<std::vector<std::uint8_t>>& grids) {
    if (grids.empty()) return {};
    const std::size_t cells = grids.front().size();
    std::vector<double> mean(cells, 0.0);
    for (const auto& g : grids)
        for (std::size_t c = 0; c < cells; ++c) mean[c] += g[c];
    double mean_total = 0.0;
    for (auto& v : mean) {
        v /= static_cast<double>(grids.size());
        mean_total += v;
    }
    std::vector<double> out;
    out.reserve(grids.size());
    for (const auto& g : grids) {
        double total = 0.0;
        for (auto v : g) total += v;
        if (total == 0.0 || mean_total == 0.0) {
            out.push_back(0.0);
            continue;
        }
        double l1 = 0.0;
        for (std::size_t c = 0; c < cells; ++c) l1 += std::abs(mean[c] / mean_total - g[c] / total);
        out.push_back(std::clamp(1.0 - 0.5 * l1, 0.0, 1.0));
    }
    return out;
}

inline std::vector<double> smf(const std::vector<ShapeMask2D>& masks) {
    if (masks.empty()) throw ParameterError("smf: no masks");
    return smf_registered(register_masks(masks).grids);
}

// ---------------------------------------------------------------------------
// GR / G-GR

/// Pixel lists of every label present, in increasing label order.
inline std::map<std::int32_t, std::vector<PixelCoord>> pixels_by_label(const LabelMap& labels) {
    std::map<std::int32_t, std::vector<PixelCoord>> out;
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) out[labels(x, y)].push_back({x, y});
    return out;
}

/// sum |mask| SRC SMF / sum |mask|.
inline double global_regularity(const std::vector<ShapeMask2D>& masks) {
    if (masks.empty()) return 0.0;
    const auto match = smf(masks);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const double weight = static_cast<double>(masks[i].count());
        num += weight * src(masks[i]) * match[i];
        den += weight;
    }
    return den > 0.0 ? num / den : 0.0;
}

/// Generalized global regularity: GR on the PCA projections of the
/// superpixels from the sphere.
inline double ggr(const LabelMap& labels) {
    require_equirect(labels.width(), labels.height());
    std::vector<ShapeMask2D> masks;
    for (const auto& [lab, px] : pixels_by_label(labels)) masks.push_back(project_shape(px, labels.width(), labels.height()));
    return global_regularity(masks);
}

/// Image-space shape of a pixel set; columns are unrolled across the seam at
/// the widest empty gap.
inline ShapeMask2D planar_shape(const std::vector<PixelCoord>& pixels, int w) {
    if (pixels.empty()) throw ParameterError("planar_shape: empty set");
    std::vector<std::uint8_t> used(static_cast<std::size_t>(w), 0);
    for (auto p : pixels) used[p.x] = 1;
    // Start right after the longest circular run of unused columns.
    int best_len = -1, best_end = 0, run = 0;
    for (int i = 0; i < 2 * w; ++i) {
        if (!used[i % w]) {
            ++run;
            if (run > best_len && run <= w) {
                best_len = run;
                best_end = i % w;
            }
        } else {
            run = 0;
        }
    }
    const int start = best_len > 0 ? (best_end + 1) % w : 0;
    int xmax = 0, ymin = 1 << 30, ymax = -1;
    for (auto p : pixels) {
        xmax = std::max(xmax, ((p.x - start) % w + w) % w);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    ShapeMask2D m(xmax + 1, ymax - ymin + 1);
    for (auto p : pixels) m.at(((p.x - start) % w + w) % w, p.y - ymin) = 1;
    return m;
}

/// GR on unprojected image-space shapes, for comparison with ggr.
inline double planar_gr(const LabelMap& labels) {
    std::vector<ShapeMask2D> masks;
    for (const auto& [lab, px] : pixels_by_label(labels)) masks.push_back(planar_shape(px, labels.width()));
    return global_regularity(masks);
}

}  // namespace sphsps
