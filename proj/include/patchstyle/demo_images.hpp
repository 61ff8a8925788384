#pragma once

// Deterministic synthetic inputs: a content image with clear structure and a
// stroke-textured style image. Used by the demo tool and the test suites.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "patchstyle/image.hpp"

namespace patchstyle::demo {

/// Light vertical gradient with a dark disk, tilted bar and rectangle.
/// Shapes are antialiased with 4x4 supersampling.
[[nodiscard]] inline PlanarImage content_image(int w, int h) {
    PlanarImage img(w, h);
    const double cx = 0.38 * w, cy = 0.42 * h, rad = 0.22 * std::min(w, h);
    const double ang = 0.5;
    const double ca = std::cos(ang), sa = std::sin(ang);
    const auto colour_at = [&](double x, double y) -> std::array<double, 3> {
        const double t = y / std::max(1, h - 1);
        std::array<double, 3> c{235.0 - 40.0 * t, 225.0 - 15.0 * t, 190.0 + 50.0 * t};
        if (x > 0.62 * w && x < 0.9 * w && y > 0.55 * h && y < 0.88 * h) c = {40.0, 70.0, 170.0};
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy < rad * rad) c = {170.0, 25.0, 25.0};
        // bar through (0.7w, 0.25h)
        const double u = (x - 0.7 * w) * ca + (y - 0.25 * h) * sa;
        const double v = -(x - 0.7 * w) * sa + (y - 0.25 * h) * ca;
        if (std::abs(u) < 0.2 * w && std::abs(v) < 0.03 * h) c = {30.0, 30.0, 40.0};
        return c;
    };
    constexpr int kSub = 4;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::array<double, 3> acc{};
            for (int sy = 0; sy < kSub; ++sy)
                for (int sx = 0; sx < kSub; ++sx) {
                    const auto c = colour_at(x + (sx + 0.5) / kSub - 0.5, y + (sy + 0.5) / kSub - 0.5);
                    for (int ch = 0; ch < 3; ++ch) acc[ch] += c[ch];
                }
            for (int ch = 0; ch < 3; ++ch) img.at(ch, y, x) = acc[ch] / (kSub * kSub);
        }
    }
    return img;
}

/// Short random brush strokes from a small palette over a base colour, with
/// antialiased edges and a fine canvas grain, quantised to 8 bits like a
/// scanned painting.
[[nodiscard]] inline PlanarImage style_image(int w, int h, std::uint64_t seed = 7) {
    static constexpr std::array<std::array<double, 3>, 5> palette{{
        {236.0, 206.0, 120.0},
        {200.0, 90.0, 50.0},
        {60.0, 100.0, 150.0},
        {30.0, 50.0, 60.0},
        {240.0, 235.0, 220.0},
    }};
    PlanarImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(0, y, x) = 150.0;
            img.at(1, y, x) = 130.0;
            img.at(2, y, x) = 100.0;
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h), ua(0.0, std::numbers::pi);
    std::uniform_real_distribution<double> ulen(6.0, 18.0), uwid(1.2, 3.0), ushade(-20.0, 20.0);
    std::uniform_int_distribution<int> upick(0, static_cast<int>(palette.size()) - 1);
    const int strokes = std::max(1, w * h / 40);
    for (int s = 0; s < strokes; ++s) {
        const double x0 = ux(rng), y0 = uy(rng), a = ua(rng), len = ulen(rng), wid = uwid(rng);
        const auto& col = palette[upick(rng)];
        const double shade = ushade(rng);
        const double ca = std::cos(a), sa = std::sin(a);
        const int r = static_cast<int>(std::ceil(len + wid)) + 1;
        for (int y = std::max(0, static_cast<int>(y0) - r); y <= std::min(h - 1, static_cast<int>(y0) + r); ++y) {
            for (int x = std::max(0, static_cast<int>(x0) - r); x <= std::min(w - 1, static_cast<int>(x0) + r); ++x) {
                const double u = (x - x0) * ca + (y - y0) * sa;
                const double v = -(x - x0) * sa + (y - y0) * ca;
                // One-pixel linear ramp at the stroke boundary.
                const double cover = std::clamp(len + 0.5 - std::abs(u), 0.0, 1.0) *
                                     std::clamp(wid + 0.5 - std::abs(v), 0.0, 1.0);
                if (cover <= 0.0) continue;
                for (int ch = 0; ch < 3; ++ch) {
                    double& p = img.at(ch, y, x);
                    p += cover * (std::clamp(col[ch] + shade, 0.0, 255.0) - p);
                }
            }
        }
    }
    std::normal_distribution<double> grain(0.0, 5.0), tint(0.0, 1.5);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = grain(rng);
            for (int ch = 0; ch < 3; ++ch) {
                double& p = img.at(ch, y, x);
                p = std::clamp(std::round(p + g + tint(rng)), 0.0, 255.0);
            }
        }
    }
    return img;
}

}  // namespace patchstyle::demo
