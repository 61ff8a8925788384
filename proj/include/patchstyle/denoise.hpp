#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"

namespace patchstyle {

struct DenoiseParams {
    double sigma_s = 5.0;
    double sigma_r = 30.0;
    int passes = 3;
};

namespace detail {

// One causal + anti-causal sweep of the first-order recursive filter along a
// line. `a[i]` is the feedback coefficient between samples i-1 and i.
inline void recursive_line(double* f, std::ptrdiff_t step, int len, const double* a) {
    for (int i = 1; i < len; ++i) f[i * step] += a[i] * (f[(i - 1) * step] - f[i * step]);
    for (int i = len - 2; i >= 0; --i) f[i * step] += a[i + 1] * (f[(i + 1) * step] - f[i * step]);
}

}  // namespace detail

/// Edge-preserving smoothing by the recursive-filter variant of the domain
/// transform. The transform derivative 1 + sigma_s/sigma_r * sum_c |dI_c| is
/// taken from the input once; each pass filters rows then columns with a
/// shrinking spatial sigma. Output is clamped to [0, 255].
[[nodiscard]] inline PlanarImage domain_transform_filter(const PlanarImage& img, const DenoiseParams& p = {}) {
    if (!(p.sigma_s > 0.0) || !(p.sigma_r > 0.0) || p.passes < 1) {
        throw ConfigError("domain transform needs sigma_s, sigma_r > 0 and passes >= 1");
    }
    const int w = img.width();
    const int h = img.height();
    const double ratio = p.sigma_s / p.sigma_r;
    // dh(y, x): derivative between (y, x-1) and (y, x); dv(y, x): between (y-1, x) and (y, x).
    std::vector<double> dh(img.plane_size(), 1.0), dv(img.plane_size(), 1.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double sx = 0.0, sy = 0.0;
            for (int c = 0; c < 3; ++c) {
                if (x > 0) sx += std::abs(img.at(c, y, x) - img.at(c, y, x - 1));
                if (y > 0) sy += std::abs(img.at(c, y, x) - img.at(c, y - 1, x));
            }
            dh[static_cast<std::size_t>(y) * w + x] = 1.0 + ratio * sx;
            dv[static_cast<std::size_t>(y) * w + x] = 1.0 + ratio * sy;
        }

    PlanarImage out = img;
    std::vector<double> ah(img.plane_size()), av(img.plane_size());

    const double n = p.passes;
    for (int i = 0; i < p.passes; ++i) {
        const double sigma_i = p.sigma_s * std::sqrt(3.0) * std::pow(2.0, n - (i + 1)) /
                               std::sqrt(std::pow(4.0, n) - 1.0);
        const double base = std::exp(-std::sqrt(2.0) / sigma_i);
        for (std::size_t k = 0; k < ah.size(); ++k) {
            ah[k] = std::pow(base, dh[k]);
            av[k] = std::pow(base, dv[k]);
        }
        for (int c = 0; c < 3; ++c) {
#pragma omp parallel for schedule(static)
            for (int y = 0; y < h; ++y) {
                detail::recursive_line(&out.at(c, y, 0), 1, w, &ah[static_cast<std::size_t>(y) * w]);
            }
#pragma omp parallel for schedule(static)
            for (int x = 0; x < w; ++x) {
                std::vector<double> coeff(h);
                for (int y = 0; y < h; ++y) coeff[y] = av[static_cast<std::size_t>(y) * w + x];
                detail::recursive_line(&out.at(c, 0, x), w, h, coeff.data());
            }
        }
    }
    return clamped(std::move(out));
}

}  // namespace patchstyle
