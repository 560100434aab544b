// sphsps command-line front end: segment, evaluate, bench.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sphsps/sphsps.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitFormat = 2;

struct ParamFlags {
    sphsps::Params params;
    std::string cache = "on";
    int features = 6;

    void add(CLI::App& app, bool with_k) {
        if (with_k) app.add_option("--k", params.k, "target superpixel count")->check(CLI::PositiveNumber);
        app.add_option("--m", params.m, "regularity trade-off")->capture_default_str();
        app.add_option("--lambda", params.lambda, "pixel vs path color weight")->check(CLI::Range(0.0, 1.0));
        app.add_option("--gamma", params.gamma, "contour crossing penalty")->check(CLI::NonNegativeNumber);
        app.add_option("--path-samples", params.path_samples, "samples per geodesic path")->check(CLI::Range(2, 1024));
        app.add_option("--iters", params.iters, "clustering iterations")->check(CLI::PositiveNumber);
        app.add_option("--cache", cache, "path cache")->check(CLI::IsMember({"on", "off"}));
        app.add_option("--features", features, "feature dimensions")->check(CLI::IsMember({3, 6}));
        app.add_option("--threads", params.threads, "worker threads")->check(CLI::PositiveNumber);
    }

    sphsps::Params resolve() const {
        auto p = params;
        p.cache_enabled = cache == "on";
        p.feature_dims = features;
        return p;
    }
};

// Missing/unreadable files exit 1, malformed or mismatched inputs exit 2.
int classify(const std::exception& e) {
    const std::string msg = e.what();
    if (msg.find("file not found") != std::string::npos || msg.find("cannot open") != std::string::npos ||
        msg.find("not found") != std::string::npos)
        return kExitIo;
    return kExitFormat;
}

int run_segment(const std::string& image_path, const ParamFlags& flags, const std::string& contour_path,
                const std::string& out_path, const std::string& overlay_path, const std::string& csv_path) {
    using namespace sphsps;
    RgbImage rgb;
    try {
        rgb = io::read_rgb(image_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    try {
        const auto params = flags.resolve();
        params.validate();
        const auto lab = srgb_to_lab(rgb);
        std::optional<ContourMap> cmap;
        if (!contour_path.empty()) cmap = load_contour_map(contour_path, lab.width(), lab.height());
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = segment(lab, params, cmap ? &*cmap : nullptr);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        io::write_labels_png(out_path, result.labels);
        if (!overlay_path.empty()) io::write_rgb_png(overlay_path, boundary_overlay(rgb, result.labels));
        if (!csv_path.empty()) io::write_labels_csv(csv_path, result.labels);
        std::cout << "labels " << distinct_labels(result.labels) << "\nseconds " << secs << '\n';
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return classify(e);
    }
    return 0;
}

int run_evaluate(const std::string& labels_path, const std::string& gt_path, double eps, const std::string& image_name,
                 int k, const std::string& metrics_out, const std::string& pr_out) {
    using namespace sphsps;
    LabelMap labels;
    GroundTruth gt;
    try {
        labels = io::read_labels(labels_path);
        gt = io::read_labels(gt_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    try {
        if (labels.width() != gt.width() || labels.height() != gt.height())
            throw FormatError("label map and ground truth differ in size");
        const auto report = evaluate(labels, gt, eps);
        const std::string name = image_name.empty() ? std::filesystem::path(labels_path).stem().string() : image_name;
        write_metrics_header(std::cout);
        write_metrics_row(std::cout, name, k, report);
        if (!metrics_out.empty()) {
            const bool fresh = !std::filesystem::exists(metrics_out);
            std::ofstream f(metrics_out, std::ios::app);
            if (!f) throw FormatError("cannot write " + metrics_out);
            if (fresh) write_metrics_header(f);
            write_metrics_row(f, name, k, report);
        }
        if (!pr_out.empty()) {
            std::ofstream f(pr_out);
            if (!f) throw FormatError("cannot write " + pr_out);
            write_pr_csv(f, report.pr_samples);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFormat;
    }
    return 0;
}

int run_bench_cmd(sphsps::BenchConfig cfg, const ParamFlags& flags) {
    using namespace sphsps;
    try {
        cfg.params = flags.resolve();
        cfg.params.threads = 1;
        cfg.params.validate();
        const auto res = run_bench(cfg);
        write_bench_csv(res, cfg.output_dir);
        std::cout << "rows " << res.rows.size() << "\nskipped " << res.skipped.size() << "\nmax_f " << res.max_f
                  << '\n';
        if (!res.cache_ab.empty()) {
            double on = 0, off = 0;
            for (const auto& r : res.cache_ab) {
                on += r.seconds_on;
                off += r.seconds_off;
            }
            std::cout << "cache_speedup " << (on > 0 ? off / on : 0.0) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spherical superpixel segmentation and evaluation"};
    app.require_subcommand(1);

    auto* seg = app.add_subcommand("segment", "segment one equirectangular image");
    std::string image, contour, out = "labels.png", overlay, csv;
    ParamFlags seg_flags;
    seg->add_option("image", image, "PNG or PPM image, width = 2 x height")->required();
    seg_flags.add(*seg, true);
    seg->add_option("--contour", contour, "grayscale contour prior (PNG/PGM)");
    seg->add_option("--out", out, "16-bit label PNG")->capture_default_str();
    seg->add_option("--overlay", overlay, "boundary overlay PNG");
    seg->add_option("--csv", csv, "label map as CSV");

    auto* ev = app.add_subcommand("evaluate", "score a label map against ground truth");
    std::string labels_path, gt_path, ev_name, metrics_out, pr_out;
    double eps = sphsps::kDefaultBoundaryEpsilon;
    int ev_k = 0;
    ev->add_option("labels", labels_path, "16-bit label PNG")->required();
    ev->add_option("gt", gt_path, "16-bit ground-truth PNG")->required();
    ev->add_option("--epsilon", eps, "boundary tolerance in pixels")->capture_default_str();
    ev->add_option("--image", ev_name, "image name for the CSV row");
    ev->add_option("--k", ev_k, "K column value");
    ev->add_option("--metrics-out", metrics_out, "append the CSV row to this file");
    ev->add_option("--pr-out", pr_out, "PR curve CSV");

    auto* bench = app.add_subcommand("bench", "sweep K over a dataset directory");
    sphsps::BenchConfig cfg;
    ParamFlags bench_flags;
    std::string contour_dir;
    bench->add_option("--images", cfg.dataset_dir, "image directory")->required();
    bench->add_option("--gt", cfg.gt_dir, "ground-truth directory (same base names)")->required();
    bench->add_option("--contours", contour_dir, "contour prior directory (same base names)");
    bench->add_option("--k", cfg.ks, "K values")->delimiter(',');
    bench_flags.add(*bench, false);
    bench->add_option("--out", cfg.output_dir, "output directory")->required();
    bench->add_flag("--ab", cfg.cache_ab, "also run with the cache toggled and report the speedup");
    bench->add_option("--epsilon", cfg.epsilon, "boundary tolerance in pixels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitFormat;
    }

    if (*seg) return run_segment(image, seg_flags, contour, out, overlay, csv);
    if (*ev) return run_evaluate(labels_path, gt_path, eps, ev_name, ev_k, metrics_out, pr_out);
    if (!contour_dir.empty()) cfg.contour_dir = contour_dir;
    cfg.threads = bench_flags.params.threads;  // images run concurrently
    return run_bench_cmd(cfg, bench_flags);
}
