#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sphsps/errors.hpp"

namespace sphsps {

/// Row-major interleaved raster with a compile-time channel count.
template <typename T, int Channels = 1>
class Raster {
public:
    static constexpr int channels = Channels;
    using value_type = T;

    Raster() = default;
    Raster(int w, int h, T fill = T{}) : w_(w), h_(h), data_(static_cast<std::size_t>(w) * h * Channels, fill) {
        if (w < 0 || h < 0) throw FormatError("negative raster dimensions");
    }

    int width() const { return w_; }
    int height() const { return h_; }
    std::size_t size() const { return static_cast<std::size_t>(w_) * h_; }
    bool empty() const { return size() == 0; }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }

    T& operator()(int x, int y, int c = 0) { return data_[index(x, y) * Channels + c]; }
    const T& operator()(int x, int y, int c = 0) const { return data_[index(x, y) * Channels + c]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T, Channels> pixel(std::size_t i) { return std::span<T, Channels>(data_.data() + i * Channels, Channels); }
    std::span<const T, Channels> pixel(std::size_t i) const {
        return std::span<const T, Channels>(data_.data() + i * Channels, Channels);
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(int w, int h) const { return w_ == w && h_ == h; }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int w_ = 0;
    int h_ = 0;
    std::vector<T> data_;
};

using RgbImage = Raster<std::uint8_t, 3>;
using GrayImage = Raster<std::uint16_t, 1>;
/// CIELab raster: L in [0, 100], a and b roughly [-128, 127].
using EquirectImage = Raster<double, 3>;
inline constexpr int kFeatureDims = 6;
/// Own Lab followed by the 3x3 neighborhood mean Lab.
using FeatureImage = Raster<double, kFeatureDims>;
/// Contour probability in [0, 1].
using ContourMap = Raster<double, 1>;
/// Per-pixel superpixel id.
using LabelMap = Raster<std::int32_t, 1>;
/// Per-pixel ground-truth object id.
using GroundTruth = Raster<std::int32_t, 1>;

inline void require_equirect(int w, int h) {
    if (h < 1 || w != 2 * h)
        throw FormatError("expected an equirectangular raster with width = 2 * height, got " + std::to_string(w) +
                          "x" + std::to_string(h));
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw FormatError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()) + ")");
}

}  // namespace sphsps
