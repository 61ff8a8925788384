#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"

namespace patchstyle {

/// Top-left corner of a patch.
struct Origin {
    int row = 0;
    int col = 0;
    friend bool operator==(const Origin&, const Origin&) = default;
};

/// Square n x n RGB block, vectorised channel-major (all R, then G, then B;
/// row-major within a channel).
struct Patch {
    int size = 0;
    Origin origin;
    std::vector<double> values;

    [[nodiscard]] static std::size_t length(int n) noexcept {
        return 3 * static_cast<std::size_t>(n) * n;
    }
};

/// Decimated set of patch origins in row-major order.
struct SampleGrid {
    std::vector<Origin> positions;
    int patch_size = 0;
    int gap = 0;
    int width = 0;
    int height = 0;

    [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }

    /// Mean number of patches covering a pixel.
    [[nodiscard]] double mean_overlap() const noexcept {
        return static_cast<double>(positions.size()) * patch_size * patch_size /
               (static_cast<double>(width) * height);
    }
};

/// Per-pixel sum of the weights of all patches covering that pixel.
using CoverageMap = ScalarField;

namespace detail {

inline std::vector<int> axis_origins(int dim, int n, int d) {
    std::vector<int> out;
    for (int o = 0; o < dim - n; o += d) out.push_back(o);
    out.push_back(dim - n);
    return out;
}

}  // namespace detail

/// Origins every `d` pixels along each axis, with the last origin snapped to
/// `dim - n` so the border is covered.
[[nodiscard]] inline SampleGrid make_grid(int w, int h, int n, int d) {
    if (n < 1 || n > w || n > h) {
        throw ConfigError("patch size " + std::to_string(n) + " does not fit a " +
                          std::to_string(w) + "x" + std::to_string(h) + " image");
    }
    if (d < 1) throw ConfigError("grid gap must be >= 1");
    if (d > n) {
        throw CoverageError("grid gap " + std::to_string(d) + " exceeds patch size " +
                            std::to_string(n) + "; pixels would be left uncovered");
    }
    SampleGrid g;
    g.patch_size = n;
    g.gap = d;
    g.width = w;
    g.height = h;
    const auto rows = detail::axis_origins(h, n, d);
    const auto cols = detail::axis_origins(w, n, d);
    g.positions.reserve(rows.size() * cols.size());
    for (int r : rows)
        for (int c : cols) g.positions.push_back({r, c});
    return g;
}

[[nodiscard]] inline bool patch_fits(const PlanarImage& img, Origin o, int n) noexcept {
    return n >= 1 && o.row >= 0 && o.col >= 0 && o.row + n <= img.height() &&
           o.col + n <= img.width();
}

/// Copies the patch at `o` into `out` (length 3n^2) without bounds checks.
inline void copy_patch(const PlanarImage& img, Origin o, int n, std::span<double> out) noexcept {
    std::size_t k = 0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < n; ++y) {
            const double* row = img.row_ptr(c, o.row + y) + o.col;
            for (int x = 0; x < n; ++x) out[k++] = row[x];
        }
}

[[nodiscard]] inline Patch extract_patch(const PlanarImage& img, Origin o, int n) {
    if (!patch_fits(img, o, n)) {
        throw DimensionError("patch of size " + std::to_string(n) + " at (" +
                             std::to_string(o.row) + "," + std::to_string(o.col) +
                             ") is outside the image");
    }
    Patch p{n, o, std::vector<double>(Patch::length(n))};
    copy_patch(img, o, n, p.values);
    return p;
}

/// Squared L2 distance between the image block at `o` and `values`.
[[nodiscard]] inline double patch_residual_sq(const PlanarImage& img, Origin o, int n,
                                              std::span<const double> values) noexcept {
    double s = 0.0;
    std::size_t k = 0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < n; ++y) {
            const double* row = img.row_ptr(c, o.row + y) + o.col;
            for (int x = 0; x < n; ++x) {
                const double e = row[x] - values[k++];
                s += e * e;
            }
        }
    return s;
}

struct Aggregate {
    PlanarImage image;
    CoverageMap coverage;
};

/// Weighted average of patches placed at their grid positions: every output
/// pixel is sum(w * value) / sum(w) over the patches covering it, which is
/// the exact minimiser of sum_ij w_ij ||R_ij x - z_ij||^2.
///
/// Accumulation follows grid order, so results do not depend on threading.
[[nodiscard]] inline Aggregate aggregate_patches(const SampleGrid& grid,
                                                 std::span<const Patch> patches,
                                                 std::span<const double> weights, int width,
                                                 int height) {
    if (patches.size() != grid.size() || weights.size() != grid.size()) {
        throw DimensionError("aggregate_patches: need one patch and one weight per position");
    }
    const int n = grid.patch_size;
    Aggregate out{PlanarImage(width, height), CoverageMap(width, height)};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = weights[i];
        if (!std::isfinite(w) || w < 0.0) {
            throw ConfigError("aggregate_patches: weights must be finite and nonnegative");
        }
        const Origin o = grid.positions[i];
        const Patch& p = patches[i];
        if (p.size != n || p.values.size() != Patch::length(n) || o.row + n > height ||
            o.col + n > width || o.row < 0 || o.col < 0) {
            throw DimensionError("aggregate_patches: patch does not match grid");
        }
        for (int y = 0; y < n; ++y) {
            double* cov = &out.coverage.at(0, o.row + y, o.col);
            for (int x = 0; x < n; ++x) cov[x] += w;
        }
        std::size_t k = 0;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < n; ++y) {
                double* row = &out.image.at(c, o.row + y, o.col);
                for (int x = 0; x < n; ++x) row[x] += w * p.values[k++];
            }
    }
    auto cov = out.coverage.plane(0);
    for (std::size_t i = 0; i < cov.size(); ++i) {
        if (!(cov[i] > 0.0)) {
            throw CoverageError("aggregate_patches: pixel " + std::to_string(i) +
                                " has zero total patch weight");
        }
    }
    for (int c = 0; c < 3; ++c) {
        auto pl = out.image.plane(c);
        for (std::size_t i = 0; i < pl.size(); ++i) pl[i] /= cov[i];
    }
    return out;
}

}  // namespace patchstyle
