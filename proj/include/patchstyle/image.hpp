#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "patchstyle/error.hpp"

namespace patchstyle {

/// Dense planar raster of `Channels` floating-point planes.
///
/// Storage is plane-major: all samples of channel 0 row by row, then channel
/// 1, and so on. Values are nominally in [0, 255] but intermediate results of
/// the optimization may leave that range; clamping is explicit.
template <int Channels>
class Raster {
    static_assert(Channels >= 1);

public:
    static constexpr int kChannels = Channels;

    Raster() = default;

    Raster(int width, int height, double fill = 0.0)
        : width_(width), height_(height) {
        if (width < 0 || height < 0) {
            throw DimensionError("negative raster size");
        }
        data_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
    }

    Raster(int width, int height, std::vector<double> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 0 || height < 0 ||
            data_.size() != static_cast<std::size_t>(width) * height * Channels) {
            throw DimensionError("raster data length does not match " + std::to_string(width) +
                                 "x" + std::to_string(height) + "x" + std::to_string(Channels));
        }
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(width_) * height_;
    }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] double& at(int c, int y, int x) noexcept {
        return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
    }
    [[nodiscard]] double at(int c, int y, int x) const noexcept {
        return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
    }

    [[nodiscard]] double* row_ptr(int c, int y) noexcept {
        return data_.data() + c * plane_size() + static_cast<std::size_t>(y) * width_;
    }
    [[nodiscard]] const double* row_ptr(int c, int y) const noexcept {
        return data_.data() + c * plane_size() + static_cast<std::size_t>(y) * width_;
    }

    [[nodiscard]] std::span<double> plane(int c) noexcept {
        return {data_.data() + c * plane_size(), plane_size()};
    }
    [[nodiscard]] std::span<const double> plane(int c) const noexcept {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    [[nodiscard]] bool same_size(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    template <int Other>
    [[nodiscard]] bool same_extent(const Raster<Other>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Three-channel RGB image; the container for content, style and estimate.
using PlanarImage = Raster<3>;
/// Single-channel field (luminance, masks, coverage).
using ScalarField = Raster<1>;

template <int C>
[[nodiscard]] Raster<C> clamped(Raster<C> img, double lo = 0.0, double hi = 255.0) {
    for (double& v : img.data()) v = std::clamp(v, lo, hi);
    return img;
}

template <int C>
[[nodiscard]] double max_abs_diff(const Raster<C>& a, const Raster<C>& b) {
    if (!a.same_size(b)) throw DimensionError("max_abs_diff: size mismatch");
    double m = 0.0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
    return m;
}

template <int C>
[[nodiscard]] double mean_abs_diff(const Raster<C>& a, const Raster<C>& b) {
    if (!a.same_size(b)) throw DimensionError("mean_abs_diff: size mismatch");
    auto da = a.data();
    auto db = b.data();
    if (da.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) s += std::abs(da[i] - db[i]);
    return s / static_cast<double>(da.size());
}

/// Rec.601 luma of an RGB image.
[[nodiscard]] inline ScalarField luminance(const PlanarImage& img) {
    ScalarField y(img.width(), img.height());
    auto r = img.plane(0);
    auto g = img.plane(1);
    auto b = img.plane(2);
    auto out = y.plane(0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    }
    return y;
}

}  // namespace patchstyle
