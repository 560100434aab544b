#pragma once

#include <array>
#include <cmath>
#include <filesystem>

#include "sphsps/errors.hpp"
#include "sphsps/image.hpp"
#include "sphsps/io.hpp"

namespace sphsps {

namespace color {

// D65 reference white, Y normalized to 1.
inline constexpr double kXn = 0.95047;
inline constexpr double kYn = 1.00000;
inline constexpr double kZn = 1.08883;

inline double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

inline double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

/// One sRGB triplet (0..255) to CIELab under D65.
inline std::array<double, 3> srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = srgb_to_linear(r8 / 255.0);
    const double g = srgb_to_linear(g8 / 255.0);
    const double b = srgb_to_linear(b8 / 255.0);
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / kXn), fy = lab_f(y / kYn), fz = lab_f(z / kZn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace color

/// Converts an 8-bit sRGB equirectangular raster to CIELab.
inline EquirectImage srgb_to_lab(const RgbImage& rgb) {
    require_equirect(rgb.width(), rgb.height());
    EquirectImage lab(rgb.width(), rgb.height());
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        const auto v = color::srgb_to_lab(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
        for (int c = 0; c < 3; ++c) lab[3 * i + c] = v[c];
    }
    return lab;
}

/// Six-dimensional features: own Lab, then the 3x3 mean Lab with horizontal
/// wrap and replicated top/bottom rows.
inline FeatureImage build_features(const EquirectImage& img) {
    const int w = img.width(), h = img.height();
    FeatureImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::array<double, 3> sum{};
            for (int dy = -1; dy <= 1; ++dy) {
                const int yy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = ((x + dx) % w + w) % w;
                    for (int c = 0; c < 3; ++c) sum[c] += img(xx, yy, c);
                }
            }
            for (int c = 0; c < 3; ++c) {
                out(x, y, c) = img(x, y, c);
                out(x, y, 3 + c) = sum[c] / 9.0;
            }
        }
    }
    return out;
}

/// Grayscale contour prior scaled into [0, 1]; must match the image size.
inline ContourMap load_contour_map(const std::filesystem::path& path, int w, int h) {
    ContourMap map = io::read_gray_unit(path);
    if (!map.same_shape(w, h))
        throw FormatError(path.string() + ": contour map is " + std::to_string(map.width()) + "x" +
                          std::to_string(map.height()) + ", image is " + std::to_string(w) + "x" +
                          std::to_string(h));
    return map;
}

}  // namespace sphsps
