#include <gtest/gtest.h>

#include <random>
#include <set>

#include "sphsps/sphsps.hpp"
#include "synthetic.hpp"

using namespace sphsps;

namespace {

FeatureImage constant_features(int h, double v = 50.0) {
    FeatureImage f(2 * h, h);
    for (auto& x : f.data()) x = v;
    return f;
}

SuperpixelState state_at(PixelCoord px, int w, int h, const Feature& mean, int id = 0) {
    SuperpixelState s;
    s.id = id;
    s.barycenter = pixel_to_sphere(px, w, h);
    s.barycenter_px = px;
    s.mean_feature = mean;
    return s;
}

FeatureImage random_features(int h, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-60.0, 100.0);
    FeatureImage f(2 * h, h);
    for (auto& x : f.data()) x = u(rng);
    return f;
}

}  // namespace

TEST(Params, Validation) {
    Params p;
    EXPECT_NO_THROW(p.validate());
    auto bad = [](auto mutate) {
        Params q;
        mutate(q);
        EXPECT_THROW(q.validate(), ParameterError);
    };
    bad([](Params& q) { q.k = 0; });
    bad([](Params& q) { q.lambda = 1.5; });
    bad([](Params& q) { q.gamma = -1.0; });
    bad([](Params& q) { q.path_samples = 1; });
    bad([](Params& q) { q.path_samples = 5000; });
    bad([](Params& q) { q.iters = 0; });
    bad([](Params& q) { q.feature_dims = 4; });
    bad([](Params& q) { q.threads = 0; });
}

TEST(InitSuperpixels, SingleSeed) {
    const auto f = constant_features(16);
    const auto s = init_superpixels(f, 1);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].id, 0);
    EXPECT_NEAR(s[0].barycenter.za, 1.0, 1e-15);
    EXPECT_EQ(s[0].barycenter_px, (PixelCoord{0, 0}));
    EXPECT_EQ(s[0].mean_feature[0], 50.0);
}

TEST(InitSuperpixels, HundredDistinctUnitSeeds) {
    const auto f = random_features(64, 1);
    const auto s = init_superpixels(f, 100);
    ASSERT_EQ(s.size(), 100u);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(norm(s[i].barycenter), 1.0, 1e-12);
        EXPECT_EQ(s[i].id, static_cast<int>(i));
        const auto q = f.index(s[i].barycenter_px.x, s[i].barycenter_px.y);
        EXPECT_EQ(s[i].mean_feature, feature_at(f, q));
        for (std::size_t j = 0; j < i; ++j) EXPECT_GT(geodesic_angle(s[i].barycenter, s[j].barycenter), 1e-6);
    }
    const auto again = init_superpixels(f, 100);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(again[i].barycenter.xa, s[i].barycenter.xa);
        EXPECT_EQ(again[i].barycenter_px, s[i].barycenter_px);
    }
}

TEST(InitSuperpixels, Errors) {
    const auto f = constant_features(4);
    EXPECT_THROW(init_superpixels(f, 0), ParameterError);
    EXPECT_THROW(init_superpixels(f, 33), ParameterError);
    EXPECT_NO_THROW(init_superpixels(f, 32));
}

TEST(RadicalInverse, Values) {
    EXPECT_EQ(radical_inverse2(0), 0.0);
    EXPECT_EQ(radical_inverse2(1), 0.5);
    EXPECT_EQ(radical_inverse2(2), 0.25);
    EXPECT_EQ(radical_inverse2(3), 0.75);
    EXPECT_EQ(radical_inverse2(5), 0.625);
}

TEST(PathColorDistance, Examples) {
    FeatureImage f(8, 4, 0.0);
    f(1, 1, 0) = std::sqrt(2.0);
    f(2, 1, 0) = 2.0;
    f(3, 2, 0) = 7.0;
    const auto st = state_at({5, 2}, 8, 4, Feature{});
    GeodesicPath path;
    path.points = {{1, 1}, {2, 1}};
    const auto p = f.pixel(f.index(3, 2));
    EXPECT_NEAR(path_color_distance(p, st, path, f, 0.0), 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(path_color_distance(p, st, path, f, 1.0), 49.0);
    EXPECT_NEAR(path_color_distance(p, st, path, f, 0.5), 0.5 * 49.0 + 0.5 * 3.0, 1e-12);

    const auto c = constant_features(4, 33.0);
    const auto sc = state_at({2, 2}, 8, 4, feature_at(c, 0));
    EXPECT_EQ(path_color_distance(c.pixel(3), sc, path, c, 0.5), 0.0);
}

TEST(PathContourFactor, Examples) {
    GeodesicPath path;
    path.points = {{0, 0}, {1, 0}, {2, 1}};
    ContourMap zero(8, 4, 0.0), cm(8, 4, 0.0);
    cm(1, 0) = 0.5;
    cm(2, 1) = 0.25;
    cm(7, 3) = 1.0;  // off the path
    EXPECT_EQ(path_contour_factor(path, &cm, 0.0), 1.0);
    EXPECT_EQ(path_contour_factor(path, &zero, 10.0), 1.0);
    EXPECT_EQ(path_contour_factor(path, nullptr, 10.0), 1.0);
    EXPECT_DOUBLE_EQ(path_contour_factor(path, &cm, 10.0), 6.0);
}

TEST(ClusteringDistance, ConstantImage) {
    const int h = 64, w = 128;
    const auto f = constant_features(h);
    Params p;
    p.k = 50;
    p.gamma = 0.0;
    const auto st = state_at({40, 20}, w, h, feature_at(f, 0));
    const auto path0 = geodesic_path(st.barycenter, st.barycenter, p.path_samples, w, h);
    EXPECT_EQ(clustering_distance({40, 20}, st, path0, p, f, nullptr), 0.0);

    const PixelCoord q{47, 25};
    const auto xq = pixel_to_sphere(q, w, h);
    const auto path = geodesic_path(xq, st.barycenter, p.path_samples, w, h);
    const double s = spatial_normalization(w, p.k);
    EXPECT_NEAR(clustering_distance(q, st, path, p, f, nullptr),
                (1.0 - dot(xq, st.barycenter)) * p.m * p.m / (s * s), 1e-15);
}

TEST(ClusteringDistance, GammaScaling) {
    const int h = 32, w = 64;
    const auto f = random_features(h, 4);
    ContourMap ones(w, h, 1.0);
    Params p;
    p.k = 20;
    p.gamma = 3.0;
    const auto st = state_at({10, 10}, w, h, feature_at(f, 77));
    const auto path = geodesic_path(pixel_to_sphere({14, 12}, w, h), st.barycenter, 15, w, h);
    const double d1 = clustering_distance({14, 12}, st, path, p, f, &ones);
    p.gamma = 6.0;
    const double d2 = clustering_distance({14, 12}, st, path, p, f, &ones);
    EXPECT_NEAR(d2 / d1, (1.0 + 6.0) / (1.0 + 3.0), 1e-12);
}

TEST(ClusteringDistance, ReducesToCosineSlicDistance) {
    std::mt19937 rng(8);
    const int h = 64, w = 128;
    const auto f = random_features(h, 9);
    std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1), uk(1, 2000);
    std::uniform_real_distribution<double> um(0.01, 1.0), uc(-50, 100);
    for (int i = 0; i < 2000; ++i) {
        Params p;
        p.lambda = 1.0;
        p.gamma = 0.0;
        p.feature_dims = 3;
        p.k = uk(rng);
        p.m = um(rng);
        Feature mean;
        for (auto& v : mean) v = uc(rng);
        const PixelCoord bq{ux(rng), uy(rng)}, q{ux(rng), uy(rng)};
        const auto st = state_at(bq, w, h, mean);
        const auto path = geodesic_path(pixel_to_sphere(q, w, h), st.barycenter, 15, w, h);
        const double got = clustering_distance(q, st, path, p, f, nullptr);
        // d_c on L, a, b only plus the cosine spatial term.
        double dc = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double t = (f(q.x, q.y, c) - mean[c]) * p.color_scale;
            dc += t * t;
        }
        const auto xp = pixel_to_sphere(q, w, h);
        const double ds = 1.0 - (xp.xa * st.barycenter.xa + xp.ya * st.barycenter.ya + xp.za * st.barycenter.za);
        const double S = w / std::sqrt(p.k * kPi);
        const double s2 = 1.0 - std::cos(std::min(2.0 * kPi * S / w, kPi));
        const double expected = dc + std::max(ds, 0.0) * p.m * p.m / s2;
        ASSERT_NEAR(got, expected, 1e-12 * std::max(1.0, expected));
    }
}

TEST(PathSampler, MatchesReferencePath) {
    std::mt19937 rng(12);
    const int h = 128, w = 256;
    std::uniform_int_distribution<int> ux(0, w - 1), uy(1, h - 1), off(-25, 25);
    std::size_t total = 0, mismatched = 0;
    for (int i = 0; i < 5000; ++i) {
        // Endpoints stay off row 0, whose pixels all project to the pole pixel.
        const PixelCoord b{ux(rng), uy(rng)};
        const PixelCoord q{((b.x + off(rng)) % w + w) % w, std::clamp(b.y + off(rng), 1, h - 1)};
        const auto st = state_at(b, w, h, Feature{});
        const auto xq = pixel_to_sphere(q, w, h);
        std::size_t pix[15];
        detail::path_pixels(static_cast<std::size_t>(q.y) * w + q.x, xq, st, 15, w, h, pix);
        const auto ref = geodesic_path(xq, st.barycenter, 15, w, h);
        for (int k = 0; k < 15; ++k) {
            ++total;
            const auto r = ref.points[k];
            if (pix[k] != static_cast<std::size_t>(r.y) * w + r.x) ++mismatched;
        }
    }
    // The incremental rotation may land on the other side of a pixel edge
    // only for samples within rounding distance of it.
    EXPECT_LT(static_cast<double>(mismatched) / total, 1e-4);
}

TEST(PathCache, DisabledEqualsDirectAggregates) {
    const int h = 64, w = 128;
    const auto f = random_features(h, 21);
    ContourMap cm(w, h);
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (auto& v : cm.data()) v = u01(rng);
    Params p;
    p.k = 40;
    p.cache_enabled = false;
    const SegmentationContext ctx(f, &cm, p);
    const auto st = state_at({60, 30}, w, h, feature_at(f, 5));
    PathCache cache(f.size());
    cache.clear();
    std::uniform_int_distribution<int> off(-10, 10);
    for (int i = 0; i < 500; ++i) {
        const PixelCoord q{60 + off(rng), 30 + off(rng)};
        const auto qi = f.index(q.x, q.y);
        const auto agg = cached_path_aggregate(ctx, qi, st, st.mean_feature, cache);
        std::size_t pix[15];
        detail::path_pixels(qi, ctx.sphere[qi], st, 15, w, h, pix);
        double sum = 0.0, mx = 0.0;
        for (auto pq : pix) {
            sum += color_distance(f.pixel(pq), st.mean_feature, 6, 1.0);
            mx = std::max(mx, cm[pq]);
        }
        EXPECT_DOUBLE_EQ(agg.mean_color, sum / 15);
        EXPECT_EQ(agg.max_contour, mx);
    }
}

TEST(PathCache, RepeatedQueryIsFullHit) {
    const int h = 64, w = 128;
    const auto f = random_features(h, 22);
    Params p;
    p.k = 40;
    const SegmentationContext ctx(f, nullptr, p);
    const auto st = state_at({60, 30}, w, h, feature_at(f, 5));
    PathCache cache(f.size());
    cache.clear();
    const auto qi = f.index(66, 35);
    const auto first = cached_path_aggregate(ctx, qi, st, st.mean_feature, cache);
    const auto walked = cache.walked;
    EXPECT_GT(walked, 0u);
    const auto second = cached_path_aggregate(ctx, qi, st, st.mean_feature, cache);
    EXPECT_EQ(cache.walked, walked);
    EXPECT_EQ(first.mean_color, second.mean_color);
    EXPECT_EQ(first.max_contour, second.max_contour);

    // A fresh pass starts from scratch.
    cache.clear();
    const auto third = cached_path_aggregate(ctx, qi, st, st.mean_feature, cache);
    EXPECT_EQ(third.mean_color, first.mean_color);
    EXPECT_GT(cache.walked, walked);
}

TEST(PathCache, FirstQueryMatchesDirect) {
    const int h = 64, w = 128;
    const auto f = random_features(h, 23);
    Params on;
    on.k = 40;
    Params off = on;
    off.cache_enabled = false;
    const SegmentationContext c_on(f, nullptr, on), c_off(f, nullptr, off);
    const auto st = state_at({20, 40}, w, h, feature_at(f, 9));
    PathCache a(f.size()), b(f.size());
    a.clear();
    b.clear();
    const auto qi = f.index(27, 33);
    EXPECT_DOUBLE_EQ(cached_path_aggregate(c_on, qi, st, st.mean_feature, a).mean_color,
                     cached_path_aggregate(c_off, qi, st, st.mean_feature, b).mean_color);
}

TEST(AssignPixels, SingleSuperpixelCoversAll) {
    const auto f = random_features(32, 3);
    Params p;
    p.k = 1;
    const SegmentationContext ctx(f, nullptr, p);
    const auto a = assign_pixels(ctx, init_superpixels(f, 1));
    for (auto l : a.labels.data()) EXPECT_EQ(l, 0);
}

TEST(AssignPixels, AntipodalPairSplitsHemispheres) {
    const int h = 32, w = 64;
    const auto f = constant_features(h);
    Params p;
    p.k = 2;
    p.gamma = 0.0;
    const SegmentationContext ctx(f, nullptr, p);
    std::vector<SuperpixelState> st{state_at({0, 16}, w, h, feature_at(f, 0), 0),
                                    state_at({32, 16}, w, h, feature_at(f, 0), 1)};
    const auto a = assign_pixels(ctx, st);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto xp = pixel_to_sphere({x, y}, w, h);
            const double d0 = dot(xp, st[0].barycenter), d1 = dot(xp, st[1].barycenter);
            if (std::abs(d0 - d1) < 1e-12) continue;
            EXPECT_EQ(a.labels(x, y), d0 > d1 ? 0 : 1) << x << "," << y;
        }
}

TEST(AssignPixels, TiesGoToLowerId) {
    const int h = 32, w = 64;
    const auto f = constant_features(h);
    Params p;
    p.k = 2;
    const SegmentationContext ctx(f, nullptr, p);
    std::vector<SuperpixelState> st{state_at({20, 16}, w, h, feature_at(f, 0), 0),
                                    state_at({20, 16}, w, h, feature_at(f, 0), 1)};
    for (int threads : {1, 2}) {
        Params pt = p;
        pt.threads = threads;
        const SegmentationContext c(f, nullptr, pt);
        const auto a = assign_pixels(c, st);
        for (auto l : a.labels.data()) EXPECT_EQ(l, 0);
    }
    (void)ctx;
}

TEST(UpdateStates, Examples) {
    const int h = 16, w = 32;
    auto f = random_features(h, 5);
    LabelMap labels(w, h, 2);
    labels(4, 5) = 0;
    labels(6, 5) = 1;
    labels(7, 9) = 1;
    std::vector<SuperpixelState> st(4);
    for (int i = 0; i < 4; ++i) st[i] = state_at({0, 8}, w, h, Feature{}, i);
    st[3].barycenter = {0, 1, 0};
    update_states(labels, f, st);

    const auto p0 = pixel_to_sphere({4, 5}, w, h);
    EXPECT_NEAR(dot(st[0].barycenter, p0), 1.0, 1e-12);
    EXPECT_EQ(st[0].barycenter_px, (PixelCoord{4, 5}));
    EXPECT_EQ(st[0].count, 1);
    EXPECT_EQ(st[0].mean_feature, feature_at(f, f.index(4, 5)));

    const auto pa = pixel_to_sphere({6, 5}, w, h), pb = pixel_to_sphere({7, 9}, w, h);
    const auto mid = normalized(pa + pb);
    EXPECT_NEAR(st[1].barycenter.xa, mid.xa, 1e-12);
    EXPECT_NEAR(st[1].barycenter.za, mid.za, 1e-12);
    EXPECT_NEAR(st[1].mean_feature[2], 0.5 * (f(6, 5, 2) + f(7, 9, 2)), 1e-12);

    // Empty superpixel keeps its state.
    EXPECT_EQ(st[3].count, 0);
    EXPECT_EQ(st[3].barycenter.ya, 1.0);
}

TEST(UpdateStates, CancellingMembersKeepBarycenter) {
    const int h = 16, w = 32;
    const auto f = constant_features(h);
    LabelMap labels(w, h, 1);
    labels(0, 8) = 0;
    labels(16, 8) = 0;  // antipodal on the equator
    std::vector<SuperpixelState> st{state_at({3, 3}, w, h, Feature{}, 0), state_at({9, 9}, w, h, Feature{}, 1)};
    const auto before = st[0].barycenter;
    update_states(labels, f, st);
    EXPECT_EQ(st[0].barycenter.xa, before.xa);
    EXPECT_EQ(st[0].barycenter.za, before.za);
    EXPECT_EQ(st[0].count, 2);
    EXPECT_EQ(st[0].mean_feature[0], 50.0);
}

TEST(Segment, ConstantImage) {
    const int h = 128;
    EquirectImage img(2 * h, h, 40.0);
    Params p;
    p.k = 64;
    const auto r = segment(img, p);
    const auto n = distinct_labels(r.labels);
    EXPECT_LE(n, 64u);
    EXPECT_GE(n, 56u);
    for (auto [lab, c] : components_per_label(r.labels)) EXPECT_EQ(c, 1) << lab;
}

TEST(Segment, TwoHemispheresK2) {
    const auto scene = synth::hemisphere_scene(64);
    Params p;
    p.k = 2;
    p.gamma = 0.0;
    const auto r = segment(srgb_to_lab(scene.rgb), p);
    EXPECT_GE(asa(r.labels, scene.gt), 0.99);
}

TEST(Segment, DeterministicAndThreadInvariant) {
    const auto scene = synth::textured_scene(7, 64);
    const auto lab = srgb_to_lab(scene.rgb);
    Params p;
    p.k = 60;
    const auto a = segment(lab, p);
    const auto b = segment(lab, p);
    EXPECT_EQ(a.labels, b.labels);
    for (int t : {2, 3, 5}) {
        Params q = p;
        q.threads = t;
        EXPECT_EQ(segment(lab, q).labels, a.labels) << t << " threads";
    }
}

TEST(Segment, OutputInvariants) {
    const auto scene = synth::textured_scene(11, 64);
    const auto lab = srgb_to_lab(scene.rgb);
    const auto cm = synth::contour_from_gt(scene.gt);
    for (int k : {1, 5, 30, 200}) {
        for (bool cache : {true, false}) {
            Params p;
            p.k = k;
            p.cache_enabled = cache;
            const auto r = segment(lab, p, &cm);
            const auto n = distinct_labels(r.labels);
            EXPECT_GE(n, 1u);
            EXPECT_LE(n, static_cast<std::size_t>(k));
            for (auto l : r.labels.data()) ASSERT_TRUE(l >= 0 && l < k);
            for (auto [lab_id, c] : components_per_label(r.labels)) EXPECT_EQ(c, 1) << "K=" << k << " label " << lab_id;
        }
    }
}

TEST(Segment, CacheDriftIsSmall) {
    const auto scene = synth::textured_scene(13, 128);
    const auto lab = srgb_to_lab(scene.rgb);
    Params on;
    on.k = 300;
    Params off = on;
    off.cache_enabled = false;
    const auto a = segment(lab, on), b = segment(lab, off);
    EXPECT_LE(std::abs(asa(a.labels, scene.gt) - asa(b.labels, scene.gt)), 0.002);
    EXPECT_LE(a.stats.walked, b.stats.walked);
}

TEST(Segment, ThreeDimensionalFeatures) {
    const auto scene = synth::textured_scene(3, 64);
    Params p;
    p.k = 50;
    p.feature_dims = 3;
    p.lambda = 1.0;
    const auto r = segment(srgb_to_lab(scene.rgb), p);
    EXPECT_GT(asa(r.labels, scene.gt), 0.85);
}
