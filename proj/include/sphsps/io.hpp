#pragma once

// Raster file I/O: PNG through libpng, binary/ASCII PNM by hand.
// Link against PNG::PNG when including this header.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sphsps/errors.hpp"
#include "sphsps/image.hpp"

namespace sphsps::io {

/// Decoded file contents before any color interpretation.
struct DecodedImage {
    int width = 0;
    int height = 0;
    int channels = 0;   // 1 (gray) or 3 (rgb)
    int max_value = 0;  // 255 or 65535 (or the PNM maxval)
    std::vector<std::uint16_t> samples;
};

namespace detail {

inline std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

inline DecodedImage read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw FormatError(path.string() + ": " + image.message);
    const bool wide = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    // Same bit depth and channel count in and out, so libpng applies no
    // gamma conversion.
    if (wide)
        image.format = color ? PNG_FORMAT_LINEAR_RGB : PNG_FORMAT_LINEAR_Y;
    else
        image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    DecodedImage out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.channels = color ? 3 : 1;
    out.max_value = wide ? 65535 : 255;
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
    out.samples.resize(n);
    bool ok = false;
    if (wide) {
        ok = png_image_finish_read(&image, nullptr, out.samples.data(), 0, nullptr);
    } else {
        std::vector<unsigned char> buf(n);
        ok = png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr);
        std::copy(buf.begin(), buf.end(), out.samples.begin());
    }
    if (!ok) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw FormatError(path.string() + ": " + msg);
    }
    return out;
}

inline void skip_pnm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

inline int read_pnm_int(std::istream& in, const std::string& name) {
    skip_pnm_space(in);
    int v = -1;
    if (!(in >> v) || v < 0) throw FormatError(name + ": malformed PNM header");
    return v;
}

inline DecodedImage read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    char magic[2];
    if (!in.read(magic, 2) || magic[0] != 'P') throw FormatError(path.string() + " is not a PNM file");
    const char kind = magic[1];
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
        throw FormatError(path.string() + ": unsupported PNM variant P" + kind);
    DecodedImage out;
    out.channels = (kind == '3' || kind == '6') ? 3 : 1;
    out.width = read_pnm_int(in, path.string());
    out.height = read_pnm_int(in, path.string());
    out.max_value = read_pnm_int(in, path.string());
    if (out.max_value < 1 || out.max_value > 65535) throw FormatError(path.string() + ": bad PNM maxval");
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
    out.samples.resize(n);
    if (kind == '2' || kind == '3') {
        for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<std::uint16_t>(read_pnm_int(in, path.string()));
    } else {
        in.get();  // single whitespace after maxval
        const bool wide = out.max_value > 255;
        std::vector<unsigned char> buf(n * (wide ? 2 : 1));
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            throw FormatError(path.string() + ": truncated PNM data");
        for (std::size_t i = 0; i < n; ++i)
            out.samples[i] = wide ? static_cast<std::uint16_t>(buf[2 * i] << 8 | buf[2 * i + 1]) : buf[i];
    }
    return out;
}

inline void write_png_raw(const std::filesystem::path& path, int w, int h, int channels, bool wide,
                          const void* samples) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    if (wide)
        image.format = channels == 3 ? PNG_FORMAT_LINEAR_RGB : PNG_FORMAT_LINEAR_Y;
    else
        image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, samples, 0, nullptr))
        throw FormatError("cannot write " + path.string() + ": " + image.message);
}

}  // namespace detail

/// Reads PNG, PPM or PGM based on the file extension (falls back to the
/// magic bytes for unknown extensions).
inline DecodedImage read_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw FormatError("file not found: " + path.string());
    const std::string ext = detail::lower_ext(path);
    if (ext == ".png") return detail::read_png(path);
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return detail::read_pnm(path);
    std::ifstream probe(path, std::ios::binary);
    char c = 0;
    probe.get(c);
    return c == 'P' ? detail::read_pnm(path) : detail::read_png(path);
}

/// 8-bit RGB raster; gray inputs are replicated into three channels.
inline RgbImage read_rgb(const std::filesystem::path& path) {
    const auto d = read_image(path);
    RgbImage img(d.width, d.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const std::uint32_t v = d.samples[i * d.channels + (d.channels == 3 ? c : 0)];
            img[i * 3 + c] = static_cast<std::uint8_t>((v * 255 + d.max_value / 2) / d.max_value);
        }
    }
    return img;
}

/// Single-channel raster scaled into [0, 1] by the file's maximum intensity.
inline Raster<double, 1> read_gray_unit(const std::filesystem::path& path) {
    const auto d = read_image(path);
    if (d.channels != 1) throw FormatError(path.string() + ": expected a grayscale raster");
    Raster<double, 1> out(d.width, d.height);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(d.samples[i]) / d.max_value;
    return out;
}

/// Label raster from a grayscale file (pixel value = label id).
inline LabelMap read_labels(const std::filesystem::path& path) {
    const auto d = read_image(path);
    if (d.channels != 1) throw FormatError(path.string() + ": label maps must be grayscale");
    LabelMap out(d.width, d.height);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.samples[i];
    return out;
}

inline void write_labels_png(const std::filesystem::path& path, const LabelMap& labels) {
    std::vector<std::uint16_t> buf(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 65535) throw FormatError("label does not fit a 16-bit PNG");
        buf[i] = static_cast<std::uint16_t>(labels[i]);
    }
    detail::write_png_raw(path, labels.width(), labels.height(), 1, true, buf.data());
}

inline void write_labels_csv(const std::filesystem::path& path, const LabelMap& labels) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) out << (x ? "," : "") << labels(x, y);
        out << '\n';
    }
}

inline void write_rgb_png(const std::filesystem::path& path, const RgbImage& img) {
    detail::write_png_raw(path, img.width(), img.height(), 3, false, img.data().data());
}

inline void write_gray8_png(const std::filesystem::path& path, const Raster<std::uint8_t, 1>& img) {
    detail::write_png_raw(path, img.width(), img.height(), 1, false, img.data().data());
}

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
}

}  // namespace sphsps::io
