#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "patchstyle/denoise.hpp"
#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"
#include "patchstyle/palette.hpp"
#include "patchstyle/patch.hpp"
#include "patchstyle/patch_index.hpp"
#include "patchstyle/pyramid.hpp"
#include "patchstyle/segmentation.hpp"

namespace patchstyle {

/// Which palette the estimate is pulled towards.
enum class PaletteMode { style, content, none };

struct SynthesisConfig {
    int l_max = 3;
    std::vector<int> patch_sizes{33, 21, 13, 9};
    std::vector<int> gaps{28, 18, 8, 5};
    int i_alg = 3;
    int i_irls = 10;
    double r = 0.8;
    double init_noise_sigma = 50.0;
    /// Noise re-added after upscaling to each finer level; defaults to half of
    /// `init_noise_sigma`.
    std::optional<double> level_noise_sigma;
    std::uint64_t seed = 0;
    /// The last (finest level, smallest patch) pass skips content fusion and
    /// palette transfer and returns the aggregated image.
    bool skip_final_fusion = true;
    double irls_epsilon = 1e-6;
    bool denoise_enabled = true;
    DenoiseParams denoise;
    PaletteMode palette = PaletteMode::style;
    IndexConfig index;

    [[nodiscard]] double renoise_sigma() const { return level_noise_sigma.value_or(0.5 * init_noise_sigma); }

    void validate() const {
        if (l_max < 1) throw ConfigError("levels must be >= 1");
        if (patch_sizes.empty()) throw ConfigError("at least one patch size is required");
        if (patch_sizes.size() != gaps.size()) throw ConfigError("patch sizes and gaps differ in length");
        for (std::size_t i = 0; i < patch_sizes.size(); ++i) {
            if (patch_sizes[i] < 1) throw ConfigError("patch sizes must be positive");
            if (i > 0 && patch_sizes[i] >= patch_sizes[i - 1]) {
                throw ConfigError("patch sizes must be strictly descending");
            }
            if (gaps[i] < 1 || gaps[i] > patch_sizes[i]) {
                throw ConfigError("gap " + std::to_string(gaps[i]) + " must lie in [1, " +
                                  std::to_string(patch_sizes[i]) + "]");
            }
        }
        if (!(r > 0.0 && r <= 2.0)) throw ConfigError("robust power r must lie in (0, 2]");
        if (i_alg < 1 || i_irls < 1) throw ConfigError("iteration counts must be >= 1");
        if (!(init_noise_sigma >= 0.0) || !(renoise_sigma() >= 0.0)) throw ConfigError("noise sigma must be >= 0");
        if (!(irls_epsilon > 0.0)) throw ConfigError("IRLS epsilon must be positive");
    }
};

/// Matches for one (level, patch size, iteration).
struct MatchSet {
    SampleGrid grid;
    std::vector<MatchResult> matches;
    std::vector<double> irls_weights;
};

enum class Stage { init, match, aggregate, fuse, palette, denoise };

[[nodiscard]] constexpr std::string_view stage_name(Stage s) noexcept {
    switch (s) {
        case Stage::init: return "init";
        case Stage::match: return "match";
        case Stage::aggregate: return "aggregate";
        case Stage::fuse: return "fuse";
        case Stage::palette: return "palette";
        case Stage::denoise: return "denoise";
    }
    return "?";
}

[[nodiscard]] inline std::optional<Stage> stage_from_name(std::string_view s) noexcept {
    for (Stage st : {Stage::init, Stage::match, Stage::aggregate, Stage::fuse, Stage::palette, Stage::denoise})
        if (stage_name(st) == s) return st;
    return std::nullopt;
}

/// Patch-term energy after every stage, in execution order.
struct EnergyTrace {
    struct Record {
        int level;
        int patch_size;
        Stage stage;
        int iteration;
        double energy;
    };
    std::vector<Record> records;

    void write_csv(std::ostream& os) const {
        os << "level,patch_size,stage,iteration,energy\n";
        char buf[64];
        for (const auto& r : records) {
            std::snprintf(buf, sizeof buf, "%.17g", r.energy);
            os << r.level << ',' << r.patch_size << ',' << stage_name(r.stage) << ',' << r.iteration << ',' << buf
               << '\n';
        }
    }
};

// ---------------------------------------------------------------------------
// Stages

[[nodiscard]] inline PlanarImage add_gaussian_noise(PlanarImage img, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
    if (sigma == 0.0) return img;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : img.data()) v += noise(rng);
    return img;
}

/// Content plus i.i.d. N(0, sigma^2) noise per sample; not clamped.
[[nodiscard]] inline PlanarImage init_estimate(const PlanarImage& content_level, double sigma, std::uint64_t seed) {
    return add_gaussian_noise(content_level, sigma, seed);
}

/// Nearest style patch for every grid position of `x`, with unit IRLS weights.
[[nodiscard]] inline MatchSet match_all(const PlanarImage& x, const SampleGrid& grid, const PatchIndex& idx) {
    const int n = grid.patch_size;
    if (n != idx.db.patch_size) throw DimensionError("match_all: grid and index patch sizes differ");
    if (grid.width != x.width() || grid.height != x.height()) throw DimensionError("match_all: grid does not fit image");
    const auto q = static_cast<Eigen::Index>(grid.size());
    PointMatrix raw(idx.db.dim(), q);
    for (Eigen::Index j = 0; j < q; ++j) detail::fill_patch_column(x, grid.positions[j], n, raw.col(j).data());
    const PointMatrix proj = idx.db.project_columns(raw);

    MatchSet ms;
    ms.grid = grid;
    ms.matches.resize(grid.size());
    ms.irls_weights.assign(grid.size(), 1.0);
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index j = 0; j < q; ++j) {
        const TreeHit hit = idx.search_projected(proj.col(j).data());
        ms.matches[j] = make_match(idx.db, hit.index, std::sqrt(static_cast<double>(hit.dist_sq)));
    }
    return ms;
}

/// Sum over the grid of ||R_ij x - z_ij||^r.
[[nodiscard]] inline double robust_objective(const PlanarImage& x, const MatchSet& ms, double r) {
    double s = 0.0;
    for (std::size_t i = 0; i < ms.grid.size(); ++i) {
        const double res = std::sqrt(patch_residual_sq(x, ms.grid.positions[i], ms.grid.patch_size,
                                                       ms.matches[i].patch.values));
        s += std::pow(res, r);
    }
    return s;
}

/// (1/c) sum ||R_ij x - z_ij||^r with c the mean number of patches per pixel.
[[nodiscard]] inline double energy_first_term(const PlanarImage& x, const MatchSet& ms, double r) {
    return robust_objective(x, ms, r) / ms.grid.mean_overlap();
}

struct IrlsTrace {
    PlanarImage image;
    /// Robust objective at the starting image and after every iteration.
    std::vector<double> objective;
    std::vector<double> weights;
};

/// Robust patch aggregation by iteratively reweighted least squares:
/// w_ij = max(||R_ij x_k - z_ij||, eps)^(r-2), then x_{k+1} is the
/// w-weighted average of the matched patches.
[[nodiscard]] inline IrlsTrace irls_aggregate_traced(const PlanarImage& x0, const MatchSet& ms, double r, int i_irls,
                                                     double epsilon) {
    if (!(r > 0.0 && r <= 2.0)) throw ConfigError("robust power r must lie in (0, 2]");
    if (i_irls < 1) throw ConfigError("IRLS needs at least one iteration");
    const std::size_t count = ms.grid.size();
    std::vector<Patch> patches(count);
    for (std::size_t i = 0; i < count; ++i) patches[i] = ms.matches[i].patch;

    IrlsTrace t;
    t.image = x0;
    t.weights.assign(count, 1.0);
    std::vector<double> res(count);
    auto residuals = [&](const PlanarImage& x) {
        double obj = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            res[i] = std::sqrt(patch_residual_sq(x, ms.grid.positions[i], ms.grid.patch_size, patches[i].values));
            obj += std::pow(res[i], r);
        }
        return obj;
    };
    t.objective.push_back(residuals(t.image));
    for (int k = 0; k < i_irls; ++k) {
        for (std::size_t i = 0; i < count; ++i) t.weights[i] = std::pow(std::max(res[i], epsilon), r - 2.0);
        t.image = aggregate_patches(ms.grid, patches, t.weights, x0.width(), x0.height()).image;
        t.objective.push_back(residuals(t.image));
    }
    return t;
}

[[nodiscard]] inline PlanarImage irls_aggregate(const PlanarImage& x0, const MatchSet& ms, double r, int i_irls,
                                                double epsilon) {
    return irls_aggregate_traced(x0, ms, r, i_irls, epsilon).image;
}

/// Pixelwise (x_tilde + W C) / (1 + W).
[[nodiscard]] inline PlanarImage fuse_content(const PlanarImage& x_tilde, const PlanarImage& content_level,
                                              const ScalarField& mask_level) {
    if (!x_tilde.same_size(content_level) || !x_tilde.same_extent(mask_level)) {
        throw DimensionError("fuse_content: image, content and mask sizes differ");
    }
    PlanarImage out(x_tilde.width(), x_tilde.height());
    auto w = mask_level.plane(0);
    for (int c = 0; c < 3; ++c) {
        auto xt = x_tilde.plane(c);
        auto ct = content_level.plane(c);
        auto o = out.plane(c);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = (xt[i] + w[i] * ct[i]) / (1.0 + w[i]);
    }
    return out;
}

[[nodiscard]] inline PlanarImage fuse_content(const PlanarImage& x_tilde, const PlanarImage& content_level,
                                              const SegmentationMask& mask_level) {
    return fuse_content(x_tilde, content_level, mask_level.weights());
}

// ---------------------------------------------------------------------------
// Full run

struct SnapshotInfo {
    int level;
    int patch_size;
    Stage stage;
    int iteration;
};

using SnapshotSink = std::function<void(const SnapshotInfo&, const PlanarImage&)>;
using IndexProvider =
    std::function<std::shared_ptr<const PatchIndex>(const PlanarImage& style_level, int level, int n, const IndexConfig&)>;

[[nodiscard]] inline IndexProvider direct_index_provider() {
    return [](const PlanarImage& s, int level, int n, const IndexConfig& cfg) {
        return std::make_shared<const PatchIndex>(build_index(s, n, cfg, level));
    };
}

struct RunHooks {
    EnergyTrace* trace = nullptr;
    SnapshotSink snapshots;
    IndexProvider indices;
};

struct RunResult {
    PlanarImage image;
    /// Content after the initial palette transfer, at native resolution.
    PlanarImage prepared_content;
    double index_seconds = 0.0;
    double synthesis_seconds = 0.0;
};

namespace detail {

inline std::uint64_t level_seed(std::uint64_t seed, int level) noexcept {
    std::uint64_t z = seed ^ (0xd1b54a32d192ed03ULL * static_cast<std::uint64_t>(level + 1));
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
    return z ^ (z >> 33);
}

}  // namespace detail

/// Coarse-to-fine style transfer. For every level (coarsest first) and patch
/// size (largest first), runs `i_alg` rounds of: match, robust aggregation,
/// content fusion, palette transfer, denoising.
[[nodiscard]] inline RunResult run_style_transfer(const PlanarImage& content, const PlanarImage& style,
                                                  const SegmentationMask& mask, const SynthesisConfig& cfg,
                                                  const RunHooks& hooks = {}) {
    using clock = std::chrono::steady_clock;
    cfg.validate();
    if (content.empty() || style.empty()) throw DimensionError("content and style must be nonempty");
    if (mask.width() != content.width() || mask.height() != content.height()) {
        throw DimensionError("mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                             " but content is " + std::to_string(content.width()) + "x" +
                             std::to_string(content.height()));
    }
    if (!content.all_finite() || !style.all_finite()) throw ConfigError("input images contain non-finite values");
    const int n_max = cfg.patch_sizes.front();
    const auto cp_levels = [&](const PlanarImage& img, const char* what) {
        try {
            return build_pyramid(img, cfg.l_max, n_max);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(what) + ": " + e.what());
        }
    };

    RunResult result;
    result.prepared_content = cfg.palette == PaletteMode::style ? match_histogram(content, style) : content;
    const auto cpyr = cp_levels(result.prepared_content, "content");
    const auto spyr = cp_levels(style, "style");
    const auto wpyr = build_pyramid(mask.weights(), cfg.l_max, 1);

    const auto t_index = clock::now();
    const IndexProvider provider = hooks.indices ? hooks.indices : direct_index_provider();
    std::vector<std::vector<std::shared_ptr<const PatchIndex>>> indices(cfg.l_max + 1);
    for (int L = cfg.l_max; L >= 1; --L) {
        for (int n : cfg.patch_sizes) indices[L].push_back(provider(spyr.level(L), L, n, cfg.index));
    }
    const auto t_synth = clock::now();
    result.index_seconds = std::chrono::duration<double>(t_synth - t_index).count();

    auto record = [&](int L, int n, Stage st, int it, const PlanarImage& x, const MatchSet& ms) {
        if (hooks.trace) hooks.trace->records.push_back({L, n, st, it, energy_first_term(x, ms, cfg.r)});
        if (hooks.snapshots && st != Stage::match) hooks.snapshots({L, n, st, it}, x);
    };

    PlanarImage x;
    for (int L = cfg.l_max; L >= 1; --L) {
        const PlanarImage& c_level = cpyr.level(L);
        const ScalarField& w_level = wpyr.level(L);
        if (L == cfg.l_max) {
            x = init_estimate(c_level, cfg.init_noise_sigma, detail::level_seed(cfg.seed, L));
        } else {
            x = add_gaussian_noise(upscale(x, c_level.width(), c_level.height()), cfg.renoise_sigma(),
                                   detail::level_seed(cfg.seed, L));
        }
        if (hooks.snapshots) hooks.snapshots({L, cfg.patch_sizes.front(), Stage::init, 0}, x);

        for (std::size_t ni = 0; ni < cfg.patch_sizes.size(); ++ni) {
            const int n = cfg.patch_sizes[ni];
            const int d = cfg.gaps[ni];
            const PatchIndex& idx = *indices[L][ni];
            const SampleGrid grid = make_grid(x.width(), x.height(), n, d);
            const bool final_pass = cfg.skip_final_fusion && L == 1 && ni + 1 == cfg.patch_sizes.size();
            for (int it = 0; it < cfg.i_alg; ++it) {
                MatchSet ms = match_all(x, grid, idx);
                record(L, n, Stage::match, it, x, ms);
                auto irls = irls_aggregate_traced(x, ms, cfg.r, cfg.i_irls, cfg.irls_epsilon);
                ms.irls_weights = std::move(irls.weights);
                x = std::move(irls.image);
                record(L, n, Stage::aggregate, it, x, ms);
                if (final_pass) {
                    // The result is the last aggregated image; earlier rounds of
                    // this pass are still regularised.
                    if (it + 1 < cfg.i_alg && cfg.denoise_enabled) {
                        x = domain_transform_filter(x, cfg.denoise);
                        record(L, n, Stage::denoise, it, x, ms);
                    }
                    continue;
                }
                x = fuse_content(x, c_level, w_level);
                record(L, n, Stage::fuse, it, x, ms);
                if (cfg.palette != PaletteMode::none) {
                    x = match_histogram(x, cfg.palette == PaletteMode::style ? spyr.level(L) : c_level);
                    record(L, n, Stage::palette, it, x, ms);
                }
                if (cfg.denoise_enabled) {
                    x = domain_transform_filter(x, cfg.denoise);
                    record(L, n, Stage::denoise, it, x, ms);
                }
            }
        }
        indices[L].clear();  // finer levels never revisit this one
    }
    result.image = clamped(std::move(x));
    result.synthesis_seconds = std::chrono::duration<double>(clock::now() - t_synth).count();
    return result;
}

}  // namespace patchstyle
