#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"

namespace patchstyle {

/// Nonnegative per-pixel importance weights over the content image.
class SegmentationMask {
public:
    SegmentationMask() = default;

    explicit SegmentationMask(ScalarField weights) : weights_(std::move(weights)) {
        for (double v : weights_.data()) {
            if (!std::isfinite(v) || v < 0.0) {
                throw ConfigError("segmentation weights must be finite and nonnegative");
            }
        }
    }

    [[nodiscard]] int width() const noexcept { return weights_.width(); }
    [[nodiscard]] int height() const noexcept { return weights_.height(); }
    [[nodiscard]] const ScalarField& weights() const noexcept { return weights_; }
    [[nodiscard]] double at(int y, int x) const noexcept { return weights_.at(0, y, x); }

private:
    ScalarField weights_;
};

/// Singular values of the local n^2 x 2 gradient matrix at every pixel.
struct StructureTensorField {
    ScalarField s1;  // larger
    ScalarField s2;  // smaller
    int window = 0;
};

/// Central-difference gradients of a scalar field with clamped neighbours.
struct Gradients {
    ScalarField gx;
    ScalarField gy;
};

[[nodiscard]] inline Gradients central_gradients(const ScalarField& f) {
    const int w = f.width();
    const int h = f.height();
    Gradients g{ScalarField(w, h), ScalarField(w, h)};
    for (int y = 0; y < h; ++y) {
        const int yu = std::max(y - 1, 0);
        const int yd = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0);
            const int xr = std::min(x + 1, w - 1);
            g.gx.at(0, y, x) = 0.5 * (f.at(0, y, xr) - f.at(0, y, xl));
            g.gy.at(0, y, x) = 0.5 * (f.at(0, yd, x) - f.at(0, yu, x));
        }
    }
    return g;
}

namespace detail {

// Sum over the in-image part of a (2r+1)^2 window; separable and direct, no
// running sums, so it stays accurate for large images.
inline ScalarField window_sum(const ScalarField& f, int r) {
    const int w = f.width();
    const int h = f.height();
    ScalarField tmp(w, h);
    ScalarField out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = std::max(x - r, 0); k <= std::min(x + r, w - 1); ++k) s += f.at(0, y, k);
            tmp.at(0, y, x) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = std::max(y - r, 0); k <= std::min(y + r, h - 1); ++k) s += tmp.at(0, k, x);
            out.at(0, y, x) = s;
        }
    return out;
}

}  // namespace detail

/// Singular values of the 2x2 Gram matrix [a b; b c] of a gradient matrix.
struct SingularPair {
    double s1;
    double s2;
};

[[nodiscard]] inline SingularPair gram_singular_values(double a, double b, double c) noexcept {
    const double half_tr = 0.5 * (a + c);
    const double root = std::hypot(0.5 * (a - c), b);
    const double l1 = half_tr + root;
    // Smaller eigenvalue from det / l1 to avoid cancellation.
    const double det = a * c - b * b;
    const double l2 = l1 > 0.0 ? det / l1 : 0.0;
    return {std::sqrt(std::max(l1, 0.0)), std::sqrt(std::clamp(l2, 0.0, std::max(l1, 0.0)))};
}

/// Structure tensor of the Rec.601 luma over an odd `window` x `window`
/// neighbourhood (pixels outside the image contribute nothing).
[[nodiscard]] inline StructureTensorField structure_tensor(const PlanarImage& img, int window) {
    if (window < 3 || window % 2 == 0) throw ConfigError("structure tensor window must be odd and >= 3");
    const auto g = central_gradients(luminance(img));
    const int w = img.width();
    const int h = img.height();
    ScalarField xx(w, h), xy(w, h), yy(w, h);
    for (std::size_t i = 0; i < xx.plane_size(); ++i) {
        const double gx = g.gx.data()[i];
        const double gy = g.gy.data()[i];
        xx.data()[i] = gx * gx;
        xy.data()[i] = gx * gy;
        yy.data()[i] = gy * gy;
    }
    const int r = window / 2;
    const auto a = detail::window_sum(xx, r);
    const auto b = detail::window_sum(xy, r);
    const auto c = detail::window_sum(yy, r);
    StructureTensorField st{ScalarField(w, h), ScalarField(w, h), window};
    for (std::size_t i = 0; i < xx.plane_size(); ++i) {
        const auto sv = gram_singular_values(a.data()[i], b.data()[i], c.data()[i]);
        st.s1.data()[i] = sv.s1;
        st.s2.data()[i] = sv.s2;
    }
    return st;
}

inline constexpr double kCoherenceEpsilon = 1e-6;

[[nodiscard]] inline double coherence(double s1, double s2) noexcept {
    return (s1 - s2) / (s1 + s2 + kCoherenceEpsilon);
}

struct EdgeMaskParams {
    /// Absolute contrast threshold on s1. When unset, `contrast_relative`
    /// times the image maximum of s1 is used.
    std::optional<double> contrast_thresh;
    double contrast_relative = 0.3;
    double coherence_thresh = 0.5;
    int window = 9;
    double fg_weight = 10.0;
    int closing_size = 5;
};

namespace detail {

using BinaryMap = std::vector<unsigned char>;

inline BinaryMap morph(const BinaryMap& in, int w, int h, int size, bool dilate) {
    const int r = size / 2;
    BinaryMap tmp(in.size()), out(in.size());
    // Out-of-image samples are ignored, which keeps erosion from eating
    // regions that touch the border.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool v = !dilate;
            for (int k = std::max(x - r, 0); k <= std::min(x + r, w - 1); ++k) {
                const bool s = in[static_cast<std::size_t>(y) * w + k] != 0;
                v = dilate ? (v || s) : (v && s);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = v;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool v = !dilate;
            for (int k = std::max(y - r, 0); k <= std::min(y + r, h - 1); ++k) {
                const bool s = tmp[static_cast<std::size_t>(k) * w + x] != 0;
                v = dilate ? (v || s) : (v && s);
            }
            out[static_cast<std::size_t>(y) * w + x] = v;
        }
    return out;
}

// Marks every pixel not 4-connected to the border through background pixels.
inline BinaryMap fill_holes(const BinaryMap& fg, int w, int h) {
    BinaryMap outside(fg.size(), 0);
    std::vector<int> stack;
    auto seed = [&](int x, int y) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!fg[i] && !outside[i]) {
            outside[i] = 1;
            stack.push_back(static_cast<int>(i));
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int x = i % w;
        const int y = i / w;
        if (x > 0) seed(x - 1, y);
        if (x + 1 < w) seed(x + 1, y);
        if (y > 0) seed(x, y - 1);
        if (y + 1 < h) seed(x, y + 1);
    }
    BinaryMap filled(fg.size());
    for (std::size_t i = 0; i < fg.size(); ++i) filled[i] = outside[i] ? 0 : 1;
    return filled;
}

}  // namespace detail

/// Strong, coherent edges of the content closed and region-filled into a
/// foreground mask of weight `fg_weight` (zero elsewhere).
[[nodiscard]] inline SegmentationMask edge_mask(const PlanarImage& img, const EdgeMaskParams& p = {}) {
    if (p.fg_weight <= 0.0) throw ConfigError("edge mask foreground weight must be positive");
    if (p.coherence_thresh < 0.0 || (p.contrast_thresh && *p.contrast_thresh < 0.0) ||
        p.contrast_relative < 0.0) {
        throw ConfigError("edge mask thresholds must be nonnegative");
    }
    const int w = img.width();
    const int h = img.height();
    const auto st = structure_tensor(img, p.window);
    double thresh = 0.0;
    if (p.contrast_thresh) {
        thresh = *p.contrast_thresh;
    } else {
        const auto s1 = st.s1.data();
        thresh = p.contrast_relative * *std::max_element(s1.begin(), s1.end());
    }
    detail::BinaryMap edges(st.s1.plane_size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const double s1 = st.s1.data()[i];
        const double s2 = st.s2.data()[i];
        edges[i] = s1 >= thresh && s1 > 0.0 && coherence(s1, s2) >= p.coherence_thresh;
    }
    auto closed = detail::morph(detail::morph(edges, w, h, p.closing_size, true), w, h,
                                p.closing_size, false);
    const auto filled = detail::fill_holes(closed, w, h);
    ScalarField weights(w, h);
    for (std::size_t i = 0; i < filled.size(); ++i) weights.data()[i] = filled[i] ? p.fg_weight : 0.0;
    return SegmentationMask(std::move(weights));
}

/// Uniform mask. alpha = 0 gives pure texture synthesis; large alpha pins the
/// result to the content.
[[nodiscard]] inline SegmentationMask constant_mask(int w, int h, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("constant mask alpha must be finite and >= 0");
    return SegmentationMask(ScalarField(w, h, alpha));
}

/// Maps an 8-bit gray mask in [0, 255] linearly onto [0, max_weight].
[[nodiscard]] inline SegmentationMask mask_from_gray(const ScalarField& gray, double max_weight) {
    if (!(max_weight >= 0.0)) throw ConfigError("mask max weight must be >= 0");
    ScalarField w(gray.width(), gray.height());
    for (std::size_t i = 0; i < w.plane_size(); ++i) {
        w.data()[i] = std::clamp(gray.data()[i], 0.0, 255.0) / 255.0 * max_weight;
    }
    return SegmentationMask(std::move(w));
}

}  // namespace patchstyle
