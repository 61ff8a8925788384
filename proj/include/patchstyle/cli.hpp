#pragma once

// Command-line front end: argument parsing, run manifest, and the batch run.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "patchstyle/error.hpp"
#include "patchstyle/hash.hpp"
#include "patchstyle/index_cache.hpp"
#include "patchstyle/io.hpp"
#include "patchstyle/parallel.hpp"
#include "patchstyle/segmentation.hpp"
#include "patchstyle/synthesis.hpp"

namespace patchstyle::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kConfig = 4, kInternal = 5 };

/// Bad command line; carries its exit code.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what, int code = kUsage) : Error(what), code_(code) {}
    [[nodiscard]] int code() const noexcept { return code_; }

private:
    int code_;
};

enum class MaskKind { edge, constant, file };

struct MaskMode {
    MaskKind kind = MaskKind::edge;
    double alpha = 0.0;
    std::string path;

    [[nodiscard]] std::string str() const {
        switch (kind) {
            case MaskKind::edge: return "edge";
            case MaskKind::constant: {
                std::ostringstream os;
                os.precision(17);
                os << "constant:" << alpha;
                return os.str();
            }
            case MaskKind::file: return "file:" + path;
        }
        return "edge";
    }
};

[[nodiscard]] inline MaskMode parse_mask_mode(const std::string& s) {
    MaskMode m;
    if (s == "edge") return m;
    if (s.rfind("constant:", 0) == 0) {
        m.kind = MaskKind::constant;
        try {
            std::size_t used = 0;
            m.alpha = std::stod(s.substr(9), &used);
            if (used != s.size() - 9) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw UsageError("--mask-mode: cannot parse alpha in '" + s + "'");
        }
        return m;
    }
    if (s.rfind("file:", 0) == 0 && s.size() > 5) {
        m.kind = MaskKind::file;
        m.path = s.substr(5);
        return m;
    }
    throw UsageError("--mask-mode must be edge, constant:<alpha> or file:<path>, got '" + s + "'");
}

struct Options {
    std::string content;
    std::string style;
    std::string out;
    MaskMode mask;
    double mask_max_weight = 10.0;
    EdgeMaskParams edge;
    SynthesisConfig cfg;
    int resize = 400;
    bool keep_aspect = false;
    int threads = 0;
    std::string trace;
    std::string snapshots;
    std::string cache_dir;
    std::string manifest;       // output manifest path; default "<out>.manifest.json"
    std::string from_manifest;  // replay an earlier run
    bool quiet = false;

    [[nodiscard]] std::string manifest_path() const { return manifest.empty() ? out + ".manifest.json" : manifest; }
};

// ---------------------------------------------------------------------------
// Manifest

[[nodiscard]] inline std::string file_digest(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    Fnv1a h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h.bytes(buf, static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

[[nodiscard]] inline nlohmann::json config_to_json(const Options& o) {
    const auto& c = o.cfg;
    nlohmann::json j;
    j["levels"] = c.l_max;
    j["patch_sizes"] = c.patch_sizes;
    j["gaps"] = c.gaps;
    j["iters"] = c.i_alg;
    j["irls_iters"] = c.i_irls;
    j["r"] = c.r;
    j["noise_sigma"] = c.init_noise_sigma;
    j["level_noise_sigma"] = c.renoise_sigma();
    j["seed"] = c.seed;
    j["skip_final_fusion"] = c.skip_final_fusion;
    j["irls_epsilon"] = c.irls_epsilon;
    j["denoise"] = {{"enabled", c.denoise_enabled},
                    {"sigma_s", c.denoise.sigma_s},
                    {"sigma_r", c.denoise.sigma_r},
                    {"passes", c.denoise.passes}};
    j["palette"] = c.palette == PaletteMode::style ? "style" : c.palette == PaletteMode::content ? "content" : "none";
    j["index"] = {{"exact_nn", c.index.exhaustive},
                  {"energy_fraction", c.index.database.energy_fraction},
                  {"stride", c.index.database.stride},
                  {"pca_samples", c.index.database.pca_sample_cap},
                  {"branching", c.index.tree.branching},
                  {"leaf_capacity", c.index.tree.leaf_capacity},
                  {"overlap_fraction", c.index.tree.overlap_fraction},
                  {"explore_ratio", c.index.tree.explore_ratio},
                  {"kmeans_iterations", c.index.tree.kmeans_iterations},
                  {"kmeans_sample", c.index.tree.kmeans_sample},
                  {"tree_seed", c.index.tree.seed}};
    j["mask_mode"] = o.mask.str();
    j["mask_max_weight"] = o.mask_max_weight;
    nlohmann::json edge = {{"window", o.edge.window},
                           {"contrast_relative", o.edge.contrast_relative},
                           {"coherence", o.edge.coherence_thresh},
                           {"weight", o.edge.fg_weight}};
    if (o.edge.contrast_thresh) edge["contrast"] = *o.edge.contrast_thresh;
    j["edge"] = edge;
    j["resize"] = o.resize;
    j["keep_aspect"] = o.keep_aspect;
    return j;
}

inline void config_from_json(const nlohmann::json& j, Options& o) {
    auto& c = o.cfg;
    c.l_max = j.at("levels").get<int>();
    c.patch_sizes = j.at("patch_sizes").get<std::vector<int>>();
    c.gaps = j.at("gaps").get<std::vector<int>>();
    c.i_alg = j.at("iters").get<int>();
    c.i_irls = j.at("irls_iters").get<int>();
    c.r = j.at("r").get<double>();
    c.init_noise_sigma = j.at("noise_sigma").get<double>();
    c.level_noise_sigma = j.at("level_noise_sigma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.skip_final_fusion = j.at("skip_final_fusion").get<bool>();
    c.irls_epsilon = j.at("irls_epsilon").get<double>();
    const auto& d = j.at("denoise");
    c.denoise_enabled = d.at("enabled").get<bool>();
    c.denoise.sigma_s = d.at("sigma_s").get<double>();
    c.denoise.sigma_r = d.at("sigma_r").get<double>();
    c.denoise.passes = d.at("passes").get<int>();
    const auto pal = j.at("palette").get<std::string>();
    c.palette = pal == "style" ? PaletteMode::style : pal == "content" ? PaletteMode::content : PaletteMode::none;
    const auto& ix = j.at("index");
    c.index.exhaustive = ix.at("exact_nn").get<bool>();
    c.index.database.energy_fraction = ix.at("energy_fraction").get<double>();
    c.index.database.stride = ix.at("stride").get<int>();
    c.index.database.pca_sample_cap = ix.at("pca_samples").get<int>();
    c.index.tree.branching = ix.at("branching").get<int>();
    c.index.tree.leaf_capacity = ix.at("leaf_capacity").get<int>();
    c.index.tree.overlap_fraction = ix.at("overlap_fraction").get<double>();
    c.index.tree.explore_ratio = ix.at("explore_ratio").get<double>();
    c.index.tree.kmeans_iterations = ix.at("kmeans_iterations").get<int>();
    c.index.tree.kmeans_sample = ix.at("kmeans_sample").get<int>();
    c.index.tree.seed = ix.at("tree_seed").get<std::uint64_t>();
    o.mask = parse_mask_mode(j.at("mask_mode").get<std::string>());
    o.mask_max_weight = j.at("mask_max_weight").get<double>();
    const auto& e = j.at("edge");
    o.edge.window = e.at("window").get<int>();
    o.edge.contrast_relative = e.at("contrast_relative").get<double>();
    o.edge.coherence_thresh = e.at("coherence").get<double>();
    o.edge.fg_weight = e.at("weight").get<double>();
    if (e.contains("contrast")) o.edge.contrast_thresh = e.at("contrast").get<double>();
    o.resize = j.at("resize").get<int>();
    o.keep_aspect = j.at("keep_aspect").get<bool>();
}

/// Replaces inputs and configuration with those recorded in a manifest.
inline void apply_manifest(const std::filesystem::path& path, Options& o) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read manifest " + path.string(), kIo);
    nlohmann::json j;
    try {
        in >> j;
        config_from_json(j.at("config"), o);
        o.content = j.at("inputs").at("content").at("path").get<std::string>();
        o.style = j.at("inputs").at("style").at("path").get<std::string>();
        if (o.out.empty()) o.out = j.at("outputs").at("image").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("malformed manifest " + path.string() + ": " + e.what(), kConfig);
    }
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s, const char* flag) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": '" + item + "' is not an integer");
        }
    }
    if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
    return out;
}

}  // namespace detail

/// Parses argv into options. Throws UsageError (with its exit code) on bad
/// input; returns nullopt when help was printed.
[[nodiscard]] inline std::optional<Options> parse_args(int argc, const char* const* argv,
                                                       std::ostream& out = std::cout) {
    Options o;
    CLI::App app{"Patch-based style transfer: synthesises the style image's texture over the content image's "
                 "structure."};
    std::string mask_mode = "edge";
    std::string patch_sizes, gaps, palette = "style";
    std::optional<double> level_noise;
    bool exact_nn = false, final_fusion = false, no_denoise = false;
    std::optional<double> edge_contrast;

    app.add_option("--content", o.content, "Content image (PNG/JPEG)");
    app.add_option("--style", o.style, "Style image (PNG/JPEG)");
    app.add_option("--out", o.out, "Output PNG");
    app.add_option("--mask-mode", mask_mode, "edge | constant:<alpha> | file:<path>");
    app.add_option("--mask-max-weight", o.mask_max_weight, "Weight of a white pixel in a mask file");
    app.add_option("--edge-window", o.edge.window, "Structure tensor window (odd)");
    app.add_option("--edge-contrast", edge_contrast, "Absolute contrast threshold on s1");
    app.add_option("--edge-contrast-rel", o.edge.contrast_relative, "Contrast threshold relative to max s1");
    app.add_option("--edge-coherence", o.edge.coherence_thresh, "Coherence threshold");
    app.add_option("--edge-weight", o.edge.fg_weight, "Foreground weight of the edge mask");
    app.add_option("--levels", o.cfg.l_max, "Pyramid levels");
    app.add_option("--patch-sizes", patch_sizes, "Comma-separated, descending (default 33,21,13,9)");
    app.add_option("--gaps", gaps, "Comma-separated grid gaps (default 28,18,8,5)");
    app.add_option("--iters", o.cfg.i_alg, "Update rounds per patch size");
    app.add_option("--irls-iters", o.cfg.i_irls, "IRLS iterations per aggregation");
    app.add_option("--r", o.cfg.r, "Robust power in (0, 2]");
    app.add_option("--noise-sigma", o.cfg.init_noise_sigma, "Initial noise sigma");
    app.add_option("--level-noise-sigma", level_noise, "Noise re-added per finer level (default half of --noise-sigma)");
    app.add_option("--seed", o.cfg.seed, "Random seed");
    app.add_flag("--exact-nn", exact_nn, "Exhaustive search instead of the cluster tree");
    app.add_flag("--final-fusion", final_fusion, "Keep fusion and palette steps in the last pass");
    app.add_option("--palette", palette, "style | content | none")->check(CLI::IsMember({"style", "content", "none"}));
    app.add_flag("--no-denoise", no_denoise, "Disable the domain-transform step");
    app.add_option("--dt-sigma-s", o.cfg.denoise.sigma_s, "Domain transform spatial sigma");
    app.add_option("--dt-sigma-r", o.cfg.denoise.sigma_r, "Domain transform range sigma");
    app.add_option("--dt-passes", o.cfg.denoise.passes, "Domain transform passes");
    app.add_option("--energy-fraction", o.cfg.index.database.energy_fraction, "PCA energy to keep");
    app.add_option("--db-stride", o.cfg.index.database.stride, "Style patch stride");
    app.add_option("--pca-samples", o.cfg.index.database.pca_sample_cap, "Patches used to fit PCA");
    app.add_option("--tree-branching", o.cfg.index.tree.branching, "Cluster tree branching factor");
    app.add_option("--tree-leaf", o.cfg.index.tree.leaf_capacity, "Cluster tree leaf capacity");
    app.add_option("--trace", o.trace, "Write the energy trace CSV here");
    app.add_option("--snapshots", o.snapshots, "Write intermediate images into this directory");
    app.add_option("--resize", o.resize, "Resize both inputs to NxN (0 keeps native size)");
    app.add_flag("--keep-aspect", o.keep_aspect, "Letterbox instead of stretching when resizing");
    app.add_option("--threads", o.threads, "Worker thread cap");
    app.add_option("--cache-dir", o.cache_dir, "Directory for prebuilt patch indices");
    app.add_option("--manifest", o.manifest, "Manifest output path (default <out>.manifest.json)");
    app.add_option("--from-manifest", o.from_manifest, "Re-run with the inputs and settings of a manifest");
    app.add_flag("--quiet", o.quiet, "Suppress the timing report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (!o.from_manifest.empty()) {
        apply_manifest(o.from_manifest, o);
        if (o.out.empty()) throw UsageError("--out is required");
        return o;
    }

    o.mask = parse_mask_mode(mask_mode);
    if (edge_contrast) o.edge.contrast_thresh = *edge_contrast;
    if (!patch_sizes.empty()) o.cfg.patch_sizes = detail::parse_int_list(patch_sizes, "--patch-sizes");
    if (!gaps.empty()) o.cfg.gaps = detail::parse_int_list(gaps, "--gaps");
    if (o.cfg.patch_sizes.size() != o.cfg.gaps.size()) {
        throw UsageError("--patch-sizes has " + std::to_string(o.cfg.patch_sizes.size()) + " entries but --gaps has " +
                         std::to_string(o.cfg.gaps.size()));
    }
    o.cfg.level_noise_sigma = level_noise;
    o.cfg.index.exhaustive = exact_nn;
    o.cfg.skip_final_fusion = !final_fusion;
    o.cfg.denoise_enabled = !no_denoise;
    o.cfg.palette = palette == "style" ? PaletteMode::style : palette == "content" ? PaletteMode::content : PaletteMode::none;
    if (o.content.empty() || o.style.empty() || o.out.empty()) {
        throw UsageError("--content, --style and --out are required");
    }
    if (o.resize < 0) throw UsageError("--resize must be >= 0");
    return o;
}

// ---------------------------------------------------------------------------
// Run

struct Timings {
    double decode = 0.0;
    double segmentation = 0.0;
    double index = 0.0;
    double synthesis = 0.0;
    double total = 0.0;
};

/// Executes a parsed run and returns its exit code. Nothing is written at
/// `out` unless the whole run succeeds.
[[nodiscard]] inline int run(const Options& o, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    using clock = std::chrono::steady_clock;
    const auto seconds = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };
    try {
        const auto t0 = clock::now();
        set_thread_count(o.threads);
        if (o.threads >= 1) {
            cv::setNumThreads(std::min<int>(o.threads, std::max(1u, std::thread::hardware_concurrency())));
        }
        o.cfg.validate();

        const PlanarImage content_raw = load_image(o.content);
        const PlanarImage style_raw = load_image(o.style);
        std::optional<SegmentationMask> file_mask;
        if (o.mask.kind == MaskKind::file) {
            file_mask = load_mask(o.mask.path, o.mask_max_weight, content_raw.width(), content_raw.height());
        }
        const auto prep = [&](const auto& img) { return o.resize > 0 ? resize_square(img, o.resize, o.keep_aspect) : img; };
        const PlanarImage content = prep(content_raw);
        const PlanarImage style = prep(style_raw);
        const auto t1 = clock::now();

        SegmentationMask mask;
        switch (o.mask.kind) {
            case MaskKind::edge: mask = edge_mask(content, o.edge); break;
            case MaskKind::constant: mask = constant_mask(content.width(), content.height(), o.mask.alpha); break;
            case MaskKind::file: mask = SegmentationMask(prep(file_mask->weights())); break;
        }
        const auto t2 = clock::now();

        EnergyTrace trace;
        RunHooks hooks;
        if (!o.trace.empty()) hooks.trace = &trace;
        if (!o.snapshots.empty()) {
            std::filesystem::create_directories(o.snapshots);
            hooks.snapshots = [dir = std::filesystem::path(o.snapshots)](const SnapshotInfo& s, const PlanarImage& x) {
                char name[96];
                std::snprintf(name, sizeof name, "L%d_n%02d_it%d_%s.png", s.level, s.patch_size, s.iteration,
                              std::string(stage_name(s.stage)).c_str());
                save_png(dir / name, x);
            };
        }
        std::unique_ptr<IndexCache> cache;
        if (!o.cache_dir.empty()) {
            cache = std::make_unique<IndexCache>(o.cache_dir);
            hooks.indices = cache->provider();
        }

        const RunResult res = run_style_transfer(content, style, mask, o.cfg, hooks);

        const std::filesystem::path out_path(o.out);
        if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
        const auto tmp = std::filesystem::path(o.out).concat(".partial.png");
        save_png(tmp, res.image);
        std::filesystem::rename(tmp, out_path);
        if (!o.trace.empty()) {
            std::ofstream csv(o.trace);
            if (!csv) throw IoError("cannot write trace " + o.trace);
            trace.write_csv(csv);
        }
        const auto t3 = clock::now();

        Timings tm{seconds(t0, t1), seconds(t1, t2), res.index_seconds, res.synthesis_seconds, seconds(t0, t3)};
        nlohmann::json m;
        m["version"] = 1;
        m["inputs"]["content"] = {{"path", o.content}, {"fnv1a64", file_digest(o.content)}};
        m["inputs"]["style"] = {{"path", o.style}, {"fnv1a64", file_digest(o.style)}};
        if (o.mask.kind == MaskKind::file) m["inputs"]["mask"] = {{"path", o.mask.path}, {"fnv1a64", file_digest(o.mask.path)}};
        m["config"] = config_to_json(o);
        m["seed"] = o.cfg.seed;
        m["threads"] = max_threads();
        m["timings_seconds"] = {{"decode", tm.decode},
                                {"segmentation", tm.segmentation},
                                {"index_build", tm.index},
                                {"synthesis", tm.synthesis},
                                {"total", tm.total}};
        m["outputs"]["image"] = o.out;
        m["outputs"]["fnv1a64"] = file_digest(o.out);
        if (!o.trace.empty()) m["outputs"]["trace"] = o.trace;
        if (!o.snapshots.empty()) m["outputs"]["snapshots"] = o.snapshots;
        if (cache) m["index_cache"] = {{"dir", o.cache_dir}, {"hits", cache->hits()}, {"builds", cache->builds()}};
        std::ofstream mf(o.manifest_path());
        if (!mf) throw IoError("cannot write manifest " + o.manifest_path());
        mf << m.dump(2) << '\n';

        if (!o.quiet) {
            log << "decode+resize   " << tm.decode << " s\n"
                << "segmentation    " << tm.segmentation << " s\n"
                << "index build     " << tm.index << " s";
            if (cache) log << " (cache hits " << cache->hits() << ", builds " << cache->builds() << ")";
            log << "\nsynthesis       " << tm.synthesis << " s\n"
                << "total           " << tm.total << " s\n"
                << "wrote " << o.out << '\n';
        }
        return kOk;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const CoverageError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const DimensionError& e) {
        err << "input error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

/// parse_args + run with exit-code mapping, for main().
[[nodiscard]] inline int main(int argc, const char* const* argv) {
    try {
        const auto opts = parse_args(argc, argv);
        if (!opts) return kOk;
        return run(*opts);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\nrun with --help for the list of options\n";
        return e.code();
    }
}

}  // namespace patchstyle::cli
