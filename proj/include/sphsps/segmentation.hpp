#pragma once

// Spherical superpixels with geodesic shortest-path feature aggregation.
//
// Each iteration compares every superpixel to the pixels of its
// latitude-dependent search window. The distance of a pixel to a superpixel
// mixes its own color distance, the mean color distance along the sampled
// great-circle path to the barycenter, the cosine spatial distance, and a
// multiplicative penalty for the strongest contour crossed by that path.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sphsps/connectivity.hpp"
#include "sphsps/errors.hpp"
#include "sphsps/features.hpp"
#include "sphsps/geometry.hpp"
#include "sphsps/image.hpp"

namespace sphsps {

struct Params {
    int k = 1000;
    double m = 0.12;
    double lambda = 0.5;
    double gamma = 10.0;
    int path_samples = 15;
    int iters = 5;
    bool cache_enabled = true;
    /// 6 = own Lab + 3x3 mean Lab, 3 = own Lab only.
    int feature_dims = 6;
    /// Multiplies feature values before squared distances (Lab 100 -> 1).
    double color_scale = 0.01;
    /// Spatial normalization of the cosine distance; <= 0 selects
    /// spatial_normalization(w, k).
    double s = 0.0;
    /// Connectivity absorption threshold in pixels; < 0 selects S^2 / 4.
    int min_size = -1;
    int threads = 1;

    void validate() const {
        if (k < 1) throw ParameterError("K must be >= 1");
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("lambda must lie in [0, 1]");
        if (!(gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
        if (path_samples < 2 || path_samples > 1024)
            throw ParameterError("path sample count must lie in [2, 1024]");
        if (iters < 1) throw ParameterError("iteration count must be >= 1");
        if (feature_dims != 3 && feature_dims != 6) throw ParameterError("feature_dims must be 3 or 6");
        if (!(m >= 0.0)) throw ParameterError("m must be >= 0");
        if (!(color_scale > 0.0)) throw ParameterError("color_scale must be > 0");
        if (threads < 1) throw ParameterError("thread count must be >= 1");
    }
};

/// s such that s^2 is the cosine dissimilarity of two equator pixels S apart,
/// so that a pixel at one superpixel size contributes m^2 spatially.
inline double spatial_normalization(int w, int k) {
    const double arc = 2.0 * kPi * superpixel_size(w, k) / w;
    return std::sqrt(1.0 - std::cos(std::min(arc, kPi)));
}

inline double resolved_s(const Params& p, int w) { return p.s > 0.0 ? p.s : spatial_normalization(w, p.k); }

inline int resolved_min_size(const Params& p, int w) {
    if (p.min_size >= 0) return p.min_size;
    const double s = superpixel_size(w, p.k);
    return static_cast<int>(s * s / 4.0);
}

using Feature = std::array<double, kFeatureDims>;

struct SuperpixelState {
    int id = 0;
    SpherePoint barycenter;
    PixelCoord barycenter_px;
    Feature mean_feature{};
    int count = 0;
};

inline Feature feature_at(const FeatureImage& f, std::size_t i) {
    Feature v;
    for (int c = 0; c < kFeatureDims; ++c) v[c] = f[i * kFeatureDims + c];
    return v;
}

/// Squared Euclidean distance over the first `dims` feature dimensions after
/// scaling by `scale`.
inline double color_distance(std::span<const double> a, std::span<const double> b, int dims, double scale) {
    double d = 0.0;
    for (int c = 0; c < dims; ++c) {
        const double t = (a[c] - b[c]) * scale;
        d += t * t;
    }
    return d;
}

/// Base-2 radical inverse (van der Corput).
inline double radical_inverse2(std::uint32_t i) {
    double result = 0.0, f = 0.5;
    while (i) {
        if (i & 1u) result += f;
        i >>= 1;
        f *= 0.5;
    }
    return result;
}

/// K barycenters from the Hammersley set: za = 1 - 2 i/K, azimuth from the
/// base-2 radical inverse of i.
inline std::vector<SuperpixelState> init_superpixels(const FeatureImage& img, int k) {
    const int w = img.width(), h = img.height();
    require_equirect(w, h);
    if (k < 1) throw ParameterError("K must be >= 1");
    if (static_cast<std::size_t>(k) > img.size()) throw ParameterError("K exceeds the number of pixels");
    std::vector<SuperpixelState> states(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const double za = 1.0 - 2.0 * i / k;
        const double az = 2.0 * kPi * radical_inverse2(static_cast<std::uint32_t>(i));
        const double r = std::sqrt(std::max(0.0, 1.0 - za * za));
        auto& s = states[i];
        s.id = i;
        s.barycenter = {r * std::cos(az), r * std::sin(az), za};
        s.barycenter_px = detail::sphere_to_pixel_fast(s.barycenter, w, h);
        s.mean_feature = feature_at(img, img.index(s.barycenter_px.x, s.barycenter_px.y));
    }
    return states;
}

/// lambda d_c(p) + (1 - lambda) mean_{q in path} d_c(q) with d_c the squared
/// feature distance to the superpixel mean.
inline double path_color_distance(std::span<const double> p_feature, const SuperpixelState& state,
                                  const GeodesicPath& path, const FeatureImage& features, double lambda,
                                  int dims = kFeatureDims, double scale = 1.0) {
    const double own = color_distance(p_feature, state.mean_feature, dims, scale);
    if (lambda >= 1.0 || path.points.empty()) return own;
    double sum = 0.0;
    for (const auto& q : path.points)
        sum += color_distance(features.pixel(features.index(q.x, q.y)), state.mean_feature, dims, scale);
    return lambda * own + (1.0 - lambda) * sum / static_cast<double>(path.points.size());
}

/// 1 + gamma * max contour value on the path; 1 without a map.
inline double path_contour_factor(const GeodesicPath& path, const ContourMap* cmap, double gamma) {
    if (!cmap || gamma == 0.0) return 1.0;
    double mx = 0.0;
    for (const auto& q : path.points) mx = std::max(mx, (*cmap)(q.x, q.y));
    return 1.0 + gamma * mx;
}

/// Full clustering distance of pixel p to a superpixel along a given path.
inline double clustering_distance(PixelCoord p, const SuperpixelState& state, const GeodesicPath& path,
                                  const Params& params, const FeatureImage& features, const ContourMap* cmap) {
    const int w = features.width(), h = features.height();
    const auto xp = pixel_to_sphere(p, w, h);
    const double s = resolved_s(params, w);
    const double dc = path_color_distance(features.pixel(features.index(p.x, p.y)), state, path, features,
                                          params.lambda, params.feature_dims, params.color_scale);
    const double ds = cosine_dissimilarity(xp, state.barycenter);
    return (dc + ds * params.m * params.m / (s * s)) * path_contour_factor(path, cmap, params.gamma);
}

struct PathAggregate {
    double mean_color = 0.0;
    double max_contour = 0.0;
};

struct PathCacheEntry {
    double suffix_color_sum = 0.0;
    int suffix_len = 0;
    double suffix_max_contour = 0.0;
};

/// Per-superpixel-pass memo of d_c values and path suffix aggregates.
/// Invalidation is O(1): bumping the pass stamp drops every entry.
class PathCache {
public:
    explicit PathCache(std::size_t pixels = 0) { resize(pixels); }

    void resize(std::size_t pixels) {
        entry_stamp_.assign(pixels, 0);
        entries_.assign(pixels, {});
        memo_stamp_.assign(pixels, 0);
        memo_.assign(pixels, 0.0);
        stamp_ = 0;
    }

    /// Starts a new (superpixel, iteration) pass.
    void clear() {
        if (++stamp_ == 0) {
            std::fill(entry_stamp_.begin(), entry_stamp_.end(), 0);
            std::fill(memo_stamp_.begin(), memo_stamp_.end(), 0);
            stamp_ = 1;
        }
    }

    const PathCacheEntry* find(std::size_t q) const { return entry_stamp_[q] == stamp_ ? &entries_[q] : nullptr; }
    void store(std::size_t q, const PathCacheEntry& e) {
        entry_stamp_[q] = stamp_;
        entries_[q] = e;
    }

    template <typename F>
    double memo_color(std::size_t q, F&& compute) {
        if (memo_stamp_[q] != stamp_) {
            memo_stamp_[q] = stamp_;
            memo_[q] = compute();
        }
        return memo_[q];
    }

    std::uint64_t walked = 0;  // pixels visited without a cache hit

private:
    std::vector<std::uint32_t> entry_stamp_;
    std::vector<PathCacheEntry> entries_;
    std::vector<std::uint32_t> memo_stamp_;
    std::vector<double> memo_;
    std::uint32_t stamp_ = 0;
};

namespace detail {

inline constexpr int kMaxPathSamples = 1024;

/// Generates, in order, the pixels of the N samples on the arc from xp to the
/// barycenter. The first sample is p itself and the last one the barycenter
/// pixel. Samples are produced lazily so a cached walk only pays for what it
/// visits.
class PathSampler {
public:
    PathSampler(std::size_t p_index, const SpherePoint& xp, const SuperpixelState& st, int n, int w, int h)
        : p_index_(p_index), xp_(xp), n_(n), w_(w), h_(h) {
        b_index_ = static_cast<std::size_t>(st.barycenter_px.y) * w + st.barycenter_px.x;
        const double d = dot(xp, st.barycenter);
        if (d >= 1.0 - 1e-12) {
            coincident_ = true;
            return;
        }
        double alpha;
        if (d <= -1.0 + 1e-12) {
            c_star_ = any_orthogonal(xp);
            alpha = kPi;
        } else {
            c_star_ = st.barycenter - xp * d;
            c_star_ = c_star_ * (1.0 / norm(c_star_));
            alpha = std::acos(d);
        }
        const double step = alpha / (n - 1);
        cs_ = std::cos(step);
        sn_ = std::sin(step);
    }

    /// Pixel of sample k; calls must come in increasing k starting from 0.
    std::size_t next(int k) {
        if (k == 0) return p_index_;
        if (coincident_) return p_index_;
        if (k == n_ - 1) return b_index_;
        const double c2 = ck_ * cs_ - sk_ * sn_;
        sk_ = sk_ * cs_ + ck_ * sn_;
        ck_ = c2;
        const PixelCoord q = sphere_to_pixel_fast(xp_ * ck_ + c_star_ * sk_, w_, h_);
        return static_cast<std::size_t>(q.y) * w_ + q.x;
    }

private:
    std::size_t p_index_;
    std::size_t b_index_ = 0;
    SpherePoint xp_;
    SpherePoint c_star_{};
    int n_, w_, h_;
    bool coincident_ = false;
    double cs_ = 1.0, sn_ = 0.0, ck_ = 1.0, sk_ = 0.0;
};

inline int path_pixels(std::size_t p_index, const SpherePoint& xp, const SuperpixelState& st, int n, int w, int h,
                       std::size_t* out) {
    PathSampler gen(p_index, xp, st, n, w, h);
    for (int k = 0; k < n; ++k) out[k] = gen.next(k);
    return n;
}

}  // namespace detail

/// Read-only inputs shared by every superpixel pass of one segmentation.
struct SegmentationContext {
    const FeatureImage* features = nullptr;  // already multiplied by color_scale
    const ContourMap* cmap = nullptr;
    std::vector<SpherePoint> sphere;  // per-pixel unit vectors
    Params params;
    int w = 0;
    int h = 0;
    double spatial_weight = 0.0;  // m^2 / s^2

    SegmentationContext(const FeatureImage& scaled, const ContourMap* contour, const Params& p)
        : features(&scaled), cmap(contour), params(p), w(scaled.width()), h(scaled.height()) {
        require_equirect(w, h);
        if (cmap) require_same_shape(*cmap, scaled, "contour map");
        sphere.resize(scaled.size());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) sphere[scaled.index(x, y)] = pixel_to_sphere({x, y}, w, h);
        const double s = resolved_s(p, w);
        spatial_weight = p.m * p.m / (s * s);
    }

    bool uses_contour() const { return cmap && params.gamma > 0.0; }
    bool uses_path() const { return params.lambda < 1.0 || uses_contour(); }

    double color(std::size_t q, std::span<const double> mean) const {
        return color_distance(features->pixel(q), mean, params.feature_dims, 1.0);
    }
    double contour(std::size_t q) const { return cmap ? (*cmap)[q] : 0.0; }
};

/// Mean d_c and max contour along the path of p to one superpixel. With the
/// cache enabled the walk stops at the first pixel already crossed by an
/// earlier path of this pass and splices its stored suffix; afterwards every
/// newly walked pixel receives its own suffix entry.
inline PathAggregate cached_path_aggregate(const SegmentationContext& ctx, std::size_t p_index,
                                           const SuperpixelState& state, std::span<const double> scaled_mean,
                                           PathCache& cache) {
    const int n = ctx.params.path_samples;
    std::size_t pix[detail::kMaxPathSamples];
    detail::PathSampler gen(p_index, ctx.sphere[p_index], state, n, ctx.w, ctx.h);
    const bool contour = ctx.uses_contour();

    if (!ctx.params.cache_enabled) {
        double sum = 0.0, mx = 0.0;
        for (int k = 0; k < n; ++k) {
            const std::size_t q = gen.next(k);
            sum += ctx.color(q, scaled_mean);
            if (contour) mx = std::max(mx, ctx.contour(q));
        }
        cache.walked += static_cast<std::uint64_t>(n);
        return {sum / n, mx};
    }

    double dcs[detail::kMaxPathSamples];
    double cvs[detail::kMaxPathSamples];
    int walked = 0;
    const PathCacheEntry* hit = nullptr;
    for (int k = 0; k < n; ++k) {
        pix[k] = gen.next(k);
        if ((hit = cache.find(pix[k]))) break;
        dcs[k] = cache.memo_color(pix[k], [&] { return ctx.color(pix[k], scaled_mean); });
        cvs[k] = contour ? ctx.contour(pix[k]) : 0.0;
        ++walked;
    }
    cache.walked += static_cast<std::uint64_t>(walked);

    // The stored suffix stands in for the remaining n - walked samples.
    double run_sum = 0.0, run_max = 0.0;
    if (hit) {
        run_sum = hit->suffix_len == n - walked ? hit->suffix_color_sum
                                                : hit->suffix_color_sum / hit->suffix_len * (n - walked);
        run_max = hit->suffix_max_contour;
    }

    // Back to front, so a pixel repeated on the path keeps its earliest suffix.
    for (int k = walked - 1; k >= 0; --k) {
        run_sum += dcs[k];
        run_max = std::max(run_max, cvs[k]);
        cache.store(pix[k], {run_sum, n - k, run_max});
    }
    return {run_sum / n, run_max};
}

struct Assignment {
    LabelMap labels;
    std::vector<double> distance;
    std::uint64_t evaluations = 0;
    std::uint64_t walked = 0;
    std::size_t uncovered = 0;
};

namespace detail {

struct Worker {
    std::vector<double> best_d;
    std::vector<std::int32_t> best_id;
    PathCache cache;
    std::uint64_t evaluations = 0;
};

inline void run_superpixel_pass(const SegmentationContext& ctx, const SuperpixelState& st, Worker& wk) {
    const auto& p = ctx.params;
    const int dims = p.feature_dims;
    std::array<double, kFeatureDims> mean{};
    for (int c = 0; c < dims; ++c) mean[c] = st.mean_feature[c] * p.color_scale;
    const std::span<const double> mean_span(mean.data(), kFeatureDims);
    const bool path = ctx.uses_path();
    const double lambda = p.lambda;
    const double gamma = ctx.uses_contour() ? p.gamma : 0.0;

    wk.cache.clear();
    const SearchWindow win = search_window(st.barycenter_px, superpixel_size(ctx.w, p.k), ctx.w, ctx.h);
    for (const auto& row : win.rows) {
        std::size_t base = static_cast<std::size_t>(row.y) * ctx.w;
        for (int j = 0; j < row.count; ++j) {
            int x = row.x0 + j;
            if (x >= ctx.w) x -= ctx.w;
            const std::size_t q = base + x;
            const double ds = std::clamp(1.0 - dot(ctx.sphere[q], st.barycenter), 0.0, 2.0);
            const double own = p.cache_enabled ? wk.cache.memo_color(q, [&] { return ctx.color(q, mean_span); })
                                               : ctx.color(q, mean_span);
            double dc = own;
            double factor = 1.0;
            if (path) {
                const PathAggregate agg = cached_path_aggregate(ctx, q, st, mean_span, wk.cache);
                dc = lambda * own + (1.0 - lambda) * agg.mean_color;
                factor = 1.0 + gamma * agg.max_contour;
            }
            const double d = (dc + ds * ctx.spatial_weight) * factor;
            ++wk.evaluations;
            if (d < wk.best_d[q]) {
                wk.best_d[q] = d;
                wk.best_id[q] = st.id;
            }
        }
    }
}

}  // namespace detail

/// One assignment round. Superpixels may be split across threads; the
/// per-thread candidates are merged by (distance, id) so the result does not
/// depend on the thread count.
inline Assignment assign_pixels(const SegmentationContext& ctx, const std::vector<SuperpixelState>& states) {
    if (states.empty()) throw ParameterError("assign_pixels: no superpixels");
    const std::size_t npix = static_cast<std::size_t>(ctx.w) * ctx.h;
    const int nthreads = std::max(1, std::min<int>(ctx.params.threads, static_cast<int>(states.size())));
    std::vector<detail::Worker> workers(static_cast<std::size_t>(nthreads));
    for (auto& wk : workers) {
        wk.best_d.assign(npix, std::numeric_limits<double>::infinity());
        wk.best_id.assign(npix, -1);
        wk.cache.resize(npix);
    }
    auto run = [&](int t) {
        for (std::size_t i = static_cast<std::size_t>(t); i < states.size(); i += static_cast<std::size_t>(nthreads))
            detail::run_superpixel_pass(ctx, states[i], workers[t]);
    };
    if (nthreads == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(run, t);
    }

    Assignment out;
    out.labels = LabelMap(ctx.w, ctx.h, -1);
    out.distance.assign(npix, std::numeric_limits<double>::infinity());
    for (const auto& wk : workers) {
        out.evaluations += wk.evaluations;
        out.walked += wk.cache.walked;
        for (std::size_t q = 0; q < npix; ++q) {
            const auto id = wk.best_id[q];
            if (id < 0) continue;
            if (wk.best_d[q] < out.distance[q] || (wk.best_d[q] == out.distance[q] && id < out.labels[q])) {
                out.distance[q] = wk.best_d[q];
                out.labels[q] = id;
            }
        }
    }
    // Pixels outside every search window go to the spatially nearest barycenter.
    for (std::size_t q = 0; q < npix; ++q) {
        if (out.labels[q] >= 0) continue;
        ++out.uncovered;
        double best = -2.0;
        for (const auto& st : states) {
            const double d = dot(ctx.sphere[q], st.barycenter);
            if (d > best) {
                best = d;
                out.labels[q] = st.id;
            }
        }
    }
    return out;
}

/// K-means update: mean feature and renormalized mean sphere point of the
/// members. Empty superpixels, and those whose members cancel out on the
/// sphere, keep their previous barycenter.
inline void update_states(const LabelMap& labels, const FeatureImage& features, std::vector<SuperpixelState>& states) {
    const int w = labels.width(), h = labels.height();
    require_same_shape(labels, features, "update_states");
    const std::size_t k = states.size();
    std::vector<Feature> fsum(k, Feature{});
    std::vector<SpherePoint> psum(k);
    std::vector<int> count(k, 0);
    for (int y = 0; y < h; ++y) {
        const double sp = std::sin(y * kPi / h), cp = std::cos(y * kPi / h);
        for (int x = 0; x < w; ++x) {
            const std::size_t q = labels.index(x, y);
            const auto id = labels[q];
            if (id < 0 || static_cast<std::size_t>(id) >= k) continue;
            const double th = 2.0 * x * kPi / w;
            psum[id] += SpherePoint{sp * std::cos(th), sp * std::sin(th), cp};
            for (int c = 0; c < kFeatureDims; ++c) fsum[id][c] += features[q * kFeatureDims + c];
            ++count[id];
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        auto& st = states[i];
        st.count = count[i];
        if (count[i] == 0) continue;
        for (int c = 0; c < kFeatureDims; ++c) st.mean_feature[c] = fsum[i][c] / count[i];
        const SpherePoint mean = psum[i] * (1.0 / count[i]);
        const double n = norm(mean);
        if (n < 1e-9) continue;
        st.barycenter = mean * (1.0 / n);
        st.barycenter_px = detail::sphere_to_pixel_fast(st.barycenter, w, h);
    }
}

struct SegmentStats {
    std::uint64_t evaluations = 0;
    std::uint64_t walked = 0;
    std::size_t uncovered = 0;
};

struct SegmentResult {
    LabelMap labels;
    std::vector<SuperpixelState> states;
    SegmentStats stats;
};

inline FeatureImage scale_features(const FeatureImage& f, double scale) {
    FeatureImage out = f;
    for (auto& v : out.data()) v *= scale;
    return out;
}

/// Runs the full pipeline on a prepared feature raster.
inline SegmentResult segment_features(const FeatureImage& features, const Params& params,
                                      const ContourMap* cmap = nullptr) {
    params.validate();
    require_equirect(features.width(), features.height());
    const FeatureImage scaled = scale_features(features, params.color_scale);
    const SegmentationContext ctx(scaled, cmap, params);

    SegmentResult res;
    res.states = init_superpixels(features, params.k);
    for (int it = 0; it < params.iters; ++it) {
        Assignment a = assign_pixels(ctx, res.states);
        res.stats.evaluations += a.evaluations;
        res.stats.walked += a.walked;
        res.stats.uncovered += a.uncovered;
        update_states(a.labels, features, res.states);
        res.labels = std::move(a.labels);
    }
    res.labels = enforce_connectivity(res.labels, resolved_min_size(params, features.width()));
    return res;
}

/// Lab image in, superpixel labels out.
inline SegmentResult segment(const EquirectImage& image, const Params& params, const ContourMap* cmap = nullptr) {
    require_equirect(image.width(), image.height());
    return segment_features(build_features(image), params, cmap);
}

}  // namespace sphsps
