#include <gtest/gtest.h>

#include <random>
#include <set>

#include "sphsps/geometry.hpp"

using namespace sphsps;

namespace {

SpherePoint random_unit(std::mt19937& rng) {
    std::normal_distribution<double> g;
    return normalized({g(rng), g(rng), g(rng)});
}

void expect_point(const SpherePoint& a, const SpherePoint& b, double tol = 1e-12) {
    EXPECT_NEAR(a.xa, b.xa, tol);
    EXPECT_NEAR(a.ya, b.ya, tol);
    EXPECT_NEAR(a.za, b.za, tol);
}

const double kHalf = std::sqrt(2.0) / 2.0;

// Angle accurate down to tiny separations, unlike acos of the dot product.
double precise_angle(const SpherePoint& a, const SpherePoint& b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

}  // namespace

TEST(PixelToSphere, KnownPoints) {
    expect_point(pixel_to_sphere({0, 0}, 1024, 512), {0, 0, 1});
    expect_point(pixel_to_sphere({0, 256}, 1024, 512), {1, 0, 0});
    expect_point(pixel_to_sphere({256, 256}, 1024, 512), {0, 1, 0});
}

TEST(PixelToSphere, UnitNorm) {
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 128; x += 7) EXPECT_NEAR(norm(pixel_to_sphere({x, y}, 128, 64)), 1.0, 1e-12);
}

TEST(PixelToSphere, RejectsOutOfBounds) {
    EXPECT_THROW(pixel_to_sphere({1024, 0}, 1024, 512), DomainError);
    EXPECT_THROW(pixel_to_sphere({0, -1}, 1024, 512), DomainError);
    EXPECT_THROW(pixel_to_sphere({0, 0}, 1000, 512), DomainError);
}

TEST(SphereToPixel, KnownPoints) {
    EXPECT_EQ(sphere_to_pixel({0, 0, 1}, 1024, 512), (PixelCoord{0, 0}));
    EXPECT_EQ(sphere_to_pixel({1, 0, 0}, 1024, 512), (PixelCoord{0, 256}));
    EXPECT_EQ(sphere_to_pixel({0, 0, -1}, 1024, 512).y, 511);
}

TEST(SphereToPixel, NegativeAzimuthWraps) {
    // Just below the x axis on the equator: atan2 < 0 must land on the last column.
    const auto p = sphere_to_pixel(normalized({1.0, -1e-4, 0.0}), 1024, 512);
    EXPECT_EQ(p.x, 1023);
}

TEST(SphereToPixel, RejectsNonUnit) { EXPECT_THROW(sphere_to_pixel({0.5, 0, 0}, 1024, 512), DomainError); }

TEST(SphereToPixel, ExhaustiveRoundTrip) {
    for (int h : {64, 128}) {
        const int w = 2 * h;
        for (int y = 1; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const PixelCoord p{x, y};
                ASSERT_EQ(sphere_to_pixel(pixel_to_sphere(p, w, h), w, h), p) << x << "," << y;
            }
        // Row 0 is the north pole itself: the whole row collapses onto one point.
        for (int x = 0; x < w; ++x) ASSERT_EQ(sphere_to_pixel(pixel_to_sphere({x, 0}, w, h), w, h), (PixelCoord{0, 0}));
    }
}

TEST(CosineDissimilarity, Examples) {
    const SpherePoint a{0.3, -0.4, std::sqrt(0.75)};
    EXPECT_NEAR(cosine_dissimilarity(a, a), 0.0, 1e-15);
    EXPECT_NEAR(cosine_dissimilarity(a, -a), 2.0, 1e-15);
    EXPECT_NEAR(cosine_dissimilarity({1, 0, 0}, {0, 1, 0}), 1.0, 1e-15);
}

TEST(CosineDissimilarity, SymmetricAndBounded) {
    std::mt19937 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_unit(rng), b = random_unit(rng);
        const double d = cosine_dissimilarity(a, b);
        EXPECT_EQ(d, cosine_dissimilarity(b, a));
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 2.0);
    }
}

TEST(OrthogonalFrame, Examples) {
    expect_point(orthogonal_frame({1, 0, 0}, {0, 1, 0}), {0, 1, 0});
    expect_point(orthogonal_frame({1, 0, 0}, {kHalf, kHalf, 0}), {0, 1, 0});
}

TEST(OrthogonalFrame, RandomPairs) {
    std::mt19937 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_unit(rng), c = random_unit(rng);
        const auto cs = orthogonal_frame(p, c);
        EXPECT_NEAR(dot(p, cs), 0.0, 1e-9);
        EXPECT_NEAR(norm(cs), 1.0, 1e-9);
        // c* lies in span{p, c}.
        EXPECT_NEAR(dot(cs, cross(p, c)), 0.0, 1e-9);
    }
}

TEST(OrthogonalFrame, CollinearThrows) {
    EXPECT_THROW(orthogonal_frame({1, 0, 0}, {1, 0, 0}), DegenerateError);
    EXPECT_THROW(orthogonal_frame({1, 0, 0}, {-1, 0, 0}), DegenerateError);
}

TEST(GeodesicAngle, Examples) {
    EXPECT_NEAR(geodesic_angle({0, 0, 1}, {0, 0, 1}), 0.0, 1e-12);
    EXPECT_NEAR(geodesic_angle({1, 0, 0}, {0, 0, 1}), kPi / 2, 1e-12);
    EXPECT_NEAR(geodesic_angle({1, 0, 0}, {kHalf, kHalf, 0}), kPi / 4, 1e-12);
    // Rounding overshoot past 1 must not produce NaN.
    EXPECT_EQ(geodesic_angle({1, 0, 0}, {1.0 + 1e-16, 0, 0}), 0.0);
}

TEST(GeodesicAngle, SymmetricAndTriangle) {
    std::mt19937 rng(5);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_unit(rng), b = random_unit(rng), c = random_unit(rng);
        EXPECT_NEAR(geodesic_angle(a, b), geodesic_angle(b, a), 1e-15);
        EXPECT_LE(geodesic_angle(a, c), geodesic_angle(a, b) + geodesic_angle(b, c) + 1e-9);
        const double ang = geodesic_angle(a, b);
        EXPECT_GE(ang, 0.0);
        EXPECT_LE(ang, kPi);
    }
}

TEST(SampleGeodesic, QuarterCircle) {
    const auto pts = geodesic_sphere_points({1, 0, 0}, {0, 1, 0}, kPi / 2, 3);
    ASSERT_EQ(pts.size(), 3u);
    expect_point(pts[0], {1, 0, 0});
    expect_point(pts[1], {kHalf, kHalf, 0});
    expect_point(pts[2], {0, 1, 0});
}

TEST(SampleGeodesic, ZeroAngle) {
    const SpherePoint p = pixel_to_sphere({100, 40}, 256, 128);
    const auto path = geodesic_path(p, p, 15, 256, 128);
    ASSERT_EQ(path.points.size(), 15u);
    for (auto q : path.points) EXPECT_EQ(q, (PixelCoord{100, 40}));
    EXPECT_EQ(path.angle, 0.0);
}

TEST(SampleGeodesic, RejectsShortPaths) {
    EXPECT_THROW(geodesic_sphere_points({1, 0, 0}, {0, 1, 0}, 1.0, 1), ParameterError);
    EXPECT_THROW(sample_geodesic({1, 0, 0}, {0, 1, 0}, 1.0, 1, 256, 128), ParameterError);
}

TEST(SampleGeodesic, OnGreatCircleWithEqualSteps) {
    std::mt19937 rng(17);
    for (int i = 0; i < 10000; ++i) {
        const auto p = random_unit(rng), c = random_unit(rng);
        if (std::abs(dot(p, c)) > 1.0 - 1e-6) continue;
        const auto normal = normalized(cross(p, c));
        const double alpha = geodesic_angle(p, c);
        const auto pts = geodesic_sphere_points(p, orthogonal_frame(p, c), alpha, 15);
        for (std::size_t k = 0; k < pts.size(); ++k) {
            ASSERT_LT(std::abs(dot(pts[k], normal)), 1e-9);
            ASSERT_NEAR(norm(pts[k]), 1.0, 1e-12);
            if (k > 0) ASSERT_NEAR(precise_angle(pts[k - 1], pts[k]), alpha / 14, 1e-9);
        }
        ASSERT_LT(precise_angle(pts.back(), c), 1e-9);
    }
}

TEST(SampleGeodesic, EndpointsProjectToSourceAndTarget) {
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> ux(0, 255), uy(1, 127);  // row 0 is a single point
    for (int i = 0; i < 2000; ++i) {
        const PixelCoord a{ux(rng), uy(rng)}, b{ux(rng), uy(rng)};
        const auto pa = pixel_to_sphere(a, 256, 128), pb = pixel_to_sphere(b, 256, 128);
        if (dot(pa, pb) <= -1.0 + 1e-12) continue;
        const auto path = geodesic_path(pa, pb, 15, 256, 128);
        EXPECT_EQ(path.points.front(), a);
        EXPECT_EQ(path.points.back(), b);
    }
}

TEST(SlerpReference, Examples) {
    const SpherePoint p{1, 0, 0}, c{0, 1, 0};
    expect_point(slerp_reference(p, c, 0.0), p);
    expect_point(slerp_reference(p, c, 1.0), c);
    expect_point(slerp_reference(p, c, 0.5), {kHalf, kHalf, 0});
    EXPECT_THROW(slerp_reference(p, -p, 0.5), DegenerateError);
}

TEST(SlerpReference, AgreesWithSampler) {
    std::mt19937 rng(29);
    for (int i = 0; i < 2000; ++i) {
        const auto p = random_unit(rng), c = random_unit(rng);
        if (std::abs(dot(p, c)) > 1.0 - 1e-6) continue;
        const auto pts = geodesic_sphere_points(p, orthogonal_frame(p, c), geodesic_angle(p, c), 15);
        for (int k = 0; k < 15; ++k) ASSERT_LT(precise_angle(pts[k], slerp_reference(p, c, k / 14.0)), 1e-9);
    }
}

TEST(SearchWindow, EquatorHalfExtentIsS) {
    const auto win = search_window({500, 256}, 8.0, 1024, 512);
    EXPECT_EQ(win.y0, 248);
    EXPECT_EQ(win.y1, 264);
    const auto& mid = win.rows[256 - win.y0];
    EXPECT_EQ(mid.x0, 492);
    EXPECT_EQ(mid.count, 17);
}

TEST(SearchWindow, WrapsAcrossSeam) {
    const auto win = search_window({2, 256}, 8.0, 1024, 512);
    const auto& mid = win.rows[256 - win.y0];
    std::set<int> cols;
    for (int j = 0; j < mid.count; ++j) cols.insert((mid.x0 + j) % 1024);
    std::set<int> expected{1018, 1019, 1020, 1021, 1022, 1023};
    for (int x = 0; x <= 10; ++x) expected.insert(x);
    EXPECT_EQ(cols, expected);
    EXPECT_TRUE(mid.wraps(1024));
}

TEST(SearchWindow, PolarRowsFullyCovered) {
    const double s = 20.0;
    const auto win = search_window({300, 5}, s, 1024, 512);
    EXPECT_EQ(win.y0, 0);
    for (const auto& row : win.rows)
        if (std::sin(row.y * kPi / 512) <= 2.0 * s / 1024) EXPECT_EQ(row.count, 1024);
    EXPECT_EQ(win.rows.front().count, 1024);
}

TEST(SearchWindow, ClampedVertically) {
    const auto win = search_window({10, 510}, 8.0, 1024, 512);
    EXPECT_EQ(win.y1, 511);
    EXPECT_EQ(win.y0, 502);
}

TEST(SearchWindow, InBoundsAndTranslationInvariant) {
    const int w = 256, h = 128;
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1), shift(1, w - 1);
    std::uniform_real_distribution<double> us(1.0, 30.0);
    for (int i = 0; i < 300; ++i) {
        const PixelCoord b{ux(rng), uy(rng)};
        const double s = us(rng);
        const int t = shift(rng);
        const auto a = search_window(b, s, w, h);
        const auto c = search_window({(b.x + t) % w, b.y}, s, w, h);
        ASSERT_EQ(a.rows.size(), c.rows.size());
        for (std::size_t r = 0; r < a.rows.size(); ++r) {
            ASSERT_GE(a.rows[r].y, 0);
            ASSERT_LT(a.rows[r].y, h);
            ASSERT_GE(a.rows[r].x0, 0);
            ASSERT_LT(a.rows[r].x0, w);
            ASSERT_LE(a.rows[r].count, w);
            std::set<int> sa, sc;
            for (int j = 0; j < a.rows[r].count; ++j) sa.insert((a.rows[r].x0 + j + t) % w);
            for (int j = 0; j < c.rows[r].count; ++j) sc.insert((c.rows[r].x0 + j) % w);
            ASSERT_EQ(sa, sc);
        }
    }
}

TEST(SuperpixelSize, Formula) { EXPECT_NEAR(superpixel_size(1024, 1000), 1024 / std::sqrt(1000 * kPi), 1e-12); }
