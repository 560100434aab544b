#pragma once

// Dataset benchmark harness: segment every image at every K, score against
// ground truth, and write CSV reports.
//
// CSV schemas (header line included in every file):
//   results.csv   image,K,asa,br,cd,com,ggr,max_f,labels,seconds
//   summary.csv   K,images,asa,br,cd,com,ggr,max_f,seconds
//   pr_curve.csv  threshold,precision,recall
//   cache_ab.csv  image,K,seconds_on,seconds_off,speedup,asa_on,asa_off,br_on,br_off
// Everything but the timing columns is reproducible bit-for-bit.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sphsps/errors.hpp"
#include "sphsps/features.hpp"
#include "sphsps/io.hpp"
#include "sphsps/metrics.hpp"
#include "sphsps/regularity.hpp"
#include "sphsps/segmentation.hpp"

namespace sphsps {

struct MetricsReport {
    double asa = 0.0;
    double br = 0.0;
    double cd = 0.0;
    double com = 0.0;
    double ggr = 0.0;
    double max_f = 0.0;
    std::vector<PrSample> pr_samples;
};

/// All metrics of one segmentation; the PR curve comes from its own
/// boundary map alone.
inline MetricsReport evaluate(const LabelMap& labels, const GroundTruth& gt, double eps = kDefaultBoundaryEpsilon) {
    require_same_shape(labels, gt, "evaluate");
    MetricsReport r;
    r.asa = asa(labels, gt);
    r.br = boundary_recall(labels, gt, eps);
    r.cd = contour_density(labels);
    r.com = com(labels);
    r.ggr = ggr(labels);
    r.pr_samples = pr_curve(std::vector<LabelMap>{labels}, gt, default_pr_thresholds(), eps);
    r.max_f = max_f(r.pr_samples);
    return r;
}

inline std::size_t distinct_labels(const LabelMap& labels) {
    return std::set<std::int32_t>(labels.data().begin(), labels.data().end()).size();
}

inline const std::vector<int>& default_k_sweep() {
    static const std::vector<int> ks{50, 100, 200, 400, 600, 1000, 1500, 2000, 3000};
    return ks;
}

struct BenchConfig {
    std::filesystem::path dataset_dir;
    std::filesystem::path gt_dir;
    std::optional<std::filesystem::path> contour_dir;
    std::vector<int> ks = default_k_sweep();
    Params params;
    std::filesystem::path output_dir;
    int threads = 1;
    bool cache_ab = false;
    double epsilon = kDefaultBoundaryEpsilon;
    std::ostream* log = &std::cerr;

    void validate() const {
        if (!std::filesystem::is_directory(dataset_dir)) throw FormatError("dataset dir not found: " + dataset_dir.string());
        if (!std::filesystem::is_directory(gt_dir)) throw FormatError("ground-truth dir not found: " + gt_dir.string());
        if (contour_dir && !std::filesystem::is_directory(*contour_dir))
            throw FormatError("contour dir not found: " + contour_dir->string());
        if (ks.empty()) throw ParameterError("K list is empty");
        for (int k : ks)
            if (k < 1) throw ParameterError("K values must be positive");
        if (threads < 1) throw ParameterError("thread count must be >= 1");
    }
};

struct BenchRow {
    std::string image;
    int k = 0;
    MetricsReport metrics;
    std::size_t labels = 0;
    double seconds = 0.0;
};

struct CacheAbRow {
    std::string image;
    int k = 0;
    double seconds_on = 0.0;
    double seconds_off = 0.0;
    double asa_on = 0.0, asa_off = 0.0;
    double br_on = 0.0, br_off = 0.0;
    double speedup() const { return seconds_on > 0.0 ? seconds_off / seconds_on : 0.0; }
};

struct BenchSummaryRow {
    int k = 0;
    std::size_t images = 0;
    double asa = 0, br = 0, cd = 0, com = 0, ggr = 0, max_f = 0, seconds = 0;
};

struct BenchResult {
    std::vector<BenchRow> rows;  // input order, then K order
    std::vector<BenchSummaryRow> summary;
    std::vector<PrSample> pr_curve;  // dataset mean of the multi-scale curves
    double max_f = 0.0;              // of pr_curve
    std::vector<CacheAbRow> cache_ab;
    std::vector<std::string> skipped;
};

inline bool is_image_file(const std::filesystem::path& p) {
    const std::string e = io::detail::lower_ext(p);
    return e == ".png" || e == ".ppm" || e == ".pgm" || e == ".pnm";
}

/// First file in `dir` named `stem` with a raster extension.
inline std::optional<std::filesystem::path> find_companion(const std::filesystem::path& dir, const std::string& stem) {
    for (const char* ext : {".png", ".pgm", ".ppm", ".pnm"}) {
        auto p = dir / (stem + ext);
        if (std::filesystem::exists(p)) return p;
    }
    return std::nullopt;
}

inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

struct ImageOutcome {
    std::vector<BenchRow> rows;
    std::vector<CacheAbRow> ab;
    std::vector<PrSample> pr;
    bool ok = false;
    std::string error;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline ImageOutcome bench_one(const BenchConfig& cfg, const std::filesystem::path& image) {
    ImageOutcome out;
    try {
        const std::string stem = image.stem().string();
        const auto gt_path = find_companion(cfg.gt_dir, stem);
        if (!gt_path) throw FormatError("no ground truth for " + stem);
        const auto lab = srgb_to_lab(io::read_rgb(image));
        const auto gt = io::read_labels(*gt_path);
        require_same_shape(lab, gt, "ground truth");
        std::optional<ContourMap> cmap;
        if (cfg.contour_dir) {
            const auto cpath = find_companion(*cfg.contour_dir, stem);
            if (!cpath) throw FormatError("no contour map for " + stem);
            cmap = load_contour_map(*cpath, lab.width(), lab.height());
        }
        const auto features = build_features(lab);
        std::vector<LabelMap> scales;
        for (int k : cfg.ks) {
            Params p = cfg.params;
            p.k = k;
            auto t0 = std::chrono::steady_clock::now();
            auto seg = segment_features(features, p, cmap ? &*cmap : nullptr);
            const double secs = seconds_since(t0);
            BenchRow row;
            row.image = stem;
            row.k = k;
            row.seconds = secs;
            row.metrics = evaluate(seg.labels, gt, cfg.epsilon);
            row.labels = distinct_labels(seg.labels);
            if (cfg.cache_ab) {
                Params off = p;
                off.cache_enabled = !p.cache_enabled;
                t0 = std::chrono::steady_clock::now();
                auto seg_off = segment_features(features, off, cmap ? &*cmap : nullptr);
                const double secs_off = seconds_since(t0);
                CacheAbRow ab;
                ab.image = stem;
                ab.k = k;
                const bool on_first = p.cache_enabled;
                ab.seconds_on = on_first ? secs : secs_off;
                ab.seconds_off = on_first ? secs_off : secs;
                const double asa_other = asa(seg_off.labels, gt), br_other = boundary_recall(seg_off.labels, gt, cfg.epsilon);
                ab.asa_on = on_first ? row.metrics.asa : asa_other;
                ab.asa_off = on_first ? asa_other : row.metrics.asa;
                ab.br_on = on_first ? row.metrics.br : br_other;
                ab.br_off = on_first ? br_other : row.metrics.br;
                out.ab.push_back(ab);
            }
            out.rows.push_back(std::move(row));
            scales.push_back(std::move(seg.labels));
        }
        out.pr = pr_curve(scales, gt, default_pr_thresholds(), cfg.epsilon);
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace detail

/// Runs the sweep. Images are distributed over cfg.threads workers; results
/// are merged back in input order.
inline BenchResult run_bench(const BenchConfig& cfg) {
    cfg.validate();
    const auto images = list_images(cfg.dataset_dir);
    if (images.empty()) throw FormatError("no images in " + cfg.dataset_dir.string());

    std::vector<detail::ImageOutcome> outcomes(images.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < images.size(); i = next++) outcomes[i] = detail::bench_one(cfg, images[i]);
    };
    const int nthreads = std::min<int>(cfg.threads, static_cast<int>(images.size()));
    if (nthreads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
    }

    BenchResult res;
    std::vector<std::vector<PrSample>> curves;
    for (std::size_t i = 0; i < images.size(); ++i) {
        auto& o = outcomes[i];
        if (!o.ok) {
            if (cfg.log) *cfg.log << "warning: skipping " << images[i].filename().string() << ": " << o.error << '\n';
            res.skipped.push_back(images[i].filename().string());
            continue;
        }
        for (auto& r : o.rows) res.rows.push_back(std::move(r));
        for (auto& r : o.ab) res.cache_ab.push_back(r);
        curves.push_back(std::move(o.pr));
    }
    if (curves.empty()) throw FormatError("every image failed");

    for (int k : cfg.ks) {
        BenchSummaryRow s;
        s.k = k;
        for (const auto& r : res.rows) {
            if (r.k != k) continue;
            ++s.images;
            s.asa += r.metrics.asa;
            s.br += r.metrics.br;
            s.cd += r.metrics.cd;
            s.com += r.metrics.com;
            s.ggr += r.metrics.ggr;
            s.max_f += r.metrics.max_f;
            s.seconds += r.seconds;
        }
        if (s.images) {
            const double n = static_cast<double>(s.images);
            s.asa /= n, s.br /= n, s.cd /= n, s.com /= n, s.ggr /= n, s.max_f /= n, s.seconds /= n;
        }
        res.summary.push_back(s);
    }
    const auto& first = curves.front();
    for (std::size_t t = 0; t < first.size(); ++t) {
        PrSample s{first[t].threshold, 0.0, 0.0};
        for (const auto& c : curves) {
            s.precision += c[t].precision;
            s.recall += c[t].recall;
        }
        s.precision /= static_cast<double>(curves.size());
        s.recall /= static_cast<double>(curves.size());
        res.pr_curve.push_back(s);
    }
    res.max_f = max_f(res.pr_curve);
    return res;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_metrics_header(std::ostream& out) { out << "image,K,asa,br,cd,com,ggr,max_f\n"; }

inline void write_metrics_row(std::ostream& out, const std::string& image, int k, const MetricsReport& m) {
    out << image << ',' << k << std::setprecision(10) << ',' << m.asa << ',' << m.br << ',' << m.cd << ',' << m.com
        << ',' << m.ggr << ',' << m.max_f << '\n';
}

inline void write_pr_csv(std::ostream& out, const std::vector<PrSample>& samples) {
    out << "threshold,precision,recall\n" << std::setprecision(10);
    for (const auto& s : samples) out << s.threshold << ',' << s.precision << ',' << s.recall << '\n';
}

inline void write_bench_csv(const BenchResult& res, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw FormatError("cannot write " + (dir / name).string());
        f << std::setprecision(10);
        return f;
    };
    {
        auto f = open("results.csv");
        f << "image,K,asa,br,cd,com,ggr,max_f,labels,seconds\n";
        for (const auto& r : res.rows)
            f << r.image << ',' << r.k << ',' << r.metrics.asa << ',' << r.metrics.br << ',' << r.metrics.cd << ','
              << r.metrics.com << ',' << r.metrics.ggr << ',' << r.metrics.max_f << ',' << r.labels << ','
              << r.seconds << '\n';
    }
    {
        auto f = open("summary.csv");
        f << "K,images,asa,br,cd,com,ggr,max_f,seconds\n";
        for (const auto& s : res.summary)
            f << s.k << ',' << s.images << ',' << s.asa << ',' << s.br << ',' << s.cd << ',' << s.com << ',' << s.ggr
              << ',' << s.max_f << ',' << s.seconds << '\n';
    }
    {
        auto f = open("pr_curve.csv");
        write_pr_csv(f, res.pr_curve);
    }
    if (!res.cache_ab.empty()) {
        auto f = open("cache_ab.csv");
        f << "image,K,seconds_on,seconds_off,speedup,asa_on,asa_off,br_on,br_off\n";
        for (const auto& r : res.cache_ab)
            f << r.image << ',' << r.k << ',' << r.seconds_on << ',' << r.seconds_off << ',' << r.speedup() << ','
              << r.asa_on << ',' << r.asa_off << ',' << r.br_on << ',' << r.br_off << '\n';
    }
}

/// Superpixel boundaries painted over the RGB source.
inline RgbImage boundary_overlay(const RgbImage& rgb, const LabelMap& labels) {
    require_same_shape(rgb, labels, "overlay");
    RgbImage out = rgb;
    const auto b = boundary_map(labels);
    for (std::size_t q = 0; q < b.size(); ++q) {
        if (!b[q]) continue;
        out[3 * q] = 255;
        out[3 * q + 1] = 0;
        out[3 * q + 2] = 0;
    }
    return out;
}

}  // namespace sphsps
