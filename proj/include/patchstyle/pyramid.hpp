#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"

namespace patchstyle {

namespace detail {

inline constexpr std::array<double, 5> kBinomial5 = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16,
                                                     1.0 / 16};

// Separable [1 4 6 4 1]/16 blur with replicated borders, then keep every
// second sample. Output size is ceil(size / 2).
template <int C>
Raster<C> blur_decimate(const Raster<C>& src) {
    const int w = src.width();
    const int h = src.height();
    const int ow = (w + 1) / 2;
    const int oh = (h + 1) / 2;
    Raster<C> out(ow, oh);
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int ox = 0; ox < ow; ++ox) {
                const int x = 2 * ox;
                double s = 0.0;
                for (int k = -2; k <= 2; ++k) {
                    s += kBinomial5[k + 2] * src.at(c, y, std::clamp(x + k, 0, w - 1));
                }
                rows[static_cast<std::size_t>(y) * ow + ox] = s;
            }
        }
        for (int oy = 0; oy < oh; ++oy) {
            const int y = 2 * oy;
            for (int ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (int k = -2; k <= 2; ++k) {
                    s += kBinomial5[k + 2] *
                         rows[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * ow + ox];
                }
                out.at(c, oy, ox) = s;
            }
        }
    }
    return out;
}

}  // namespace detail

/// Gaussian pyramid indexed by level: level 1 is native resolution and
/// level `level_count()` is the coarsest.
template <int C>
class GaussianPyramid {
public:
    GaussianPyramid() = default;
    explicit GaussianPyramid(std::vector<Raster<C>> finest_first)
        : levels_(std::move(finest_first)) {}

    [[nodiscard]] int level_count() const noexcept { return static_cast<int>(levels_.size()); }

    [[nodiscard]] const Raster<C>& level(int L) const {
        if (L < 1 || L > level_count()) {
            throw ConfigError("pyramid level " + std::to_string(L) + " out of range");
        }
        return levels_[L - 1];
    }

private:
    std::vector<Raster<C>> levels_;
};

/// Smallest pyramid level size for a given number of levels.
[[nodiscard]] inline int coarsest_extent(int size, int l_max) {
    for (int l = 1; l < l_max; ++l) size = (size + 1) / 2;
    return size;
}

/// Builds `l_max` levels by repeated binomial blur and 2x decimation.
/// Throws ConfigError when the coarsest level would be smaller than
/// `min_size` on either side.
template <int C>
[[nodiscard]] GaussianPyramid<C> build_pyramid(const Raster<C>& img, int l_max, int min_size = 33) {
    if (l_max < 1) throw ConfigError("pyramid needs at least one level");
    const int cw = coarsest_extent(img.width(), l_max);
    const int ch = coarsest_extent(img.height(), l_max);
    if (cw < min_size || ch < min_size) {
        throw ConfigError("image " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()) + " with " + std::to_string(l_max) +
                          " levels gives a " + std::to_string(cw) + "x" + std::to_string(ch) +
                          " coarsest level, below the minimum " + std::to_string(min_size));
    }
    std::vector<Raster<C>> levels;
    levels.reserve(l_max);
    levels.push_back(img);
    for (int l = 1; l < l_max; ++l) levels.push_back(detail::blur_decimate(levels.back()));
    return GaussianPyramid<C>(std::move(levels));
}

/// Bilinear resampling with corner-aligned sample grids, clamped to [0, 255].
/// Corners of the source map exactly onto corners of the target.
template <int C>
[[nodiscard]] Raster<C> upscale(const Raster<C>& img, int target_w, int target_h) {
    if (target_w < img.width() || target_h < img.height()) {
        throw DimensionError("upscale target smaller than source");
    }
    if (img.empty()) throw DimensionError("upscale of empty image");
    const int sw = img.width();
    const int sh = img.height();
    const double fx = target_w > 1 ? static_cast<double>(sw - 1) / (target_w - 1) : 0.0;
    const double fy = target_h > 1 ? static_cast<double>(sh - 1) / (target_h - 1) : 0.0;
    Raster<C> out(target_w, target_h);
    for (int y = 0; y < target_h; ++y) {
        const double sy = y * fy;
        const int y0 = std::min(static_cast<int>(sy), sh - 1);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double ty = sy - y0;
        for (int x = 0; x < target_w; ++x) {
            const double sx = x * fx;
            const int x0 = std::min(static_cast<int>(sx), sw - 1);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double tx = sx - x0;
            for (int c = 0; c < C; ++c) {
                const double top = img.at(c, y0, x0) + tx * (img.at(c, y0, x1) - img.at(c, y0, x0));
                const double bot = img.at(c, y1, x0) + tx * (img.at(c, y1, x1) - img.at(c, y1, x0));
                out.at(c, y, x) = std::clamp(top + ty * (bot - top), 0.0, 255.0);
            }
        }
    }
    return out;
}

}  // namespace patchstyle
