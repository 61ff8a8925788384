#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "patchstyle/image.hpp"

namespace testsupport {

inline patchstyle::PlanarImage random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 255.0) {
    patchstyle::PlanarImage img(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : img.data()) v = u(rng);
    return img;
}

inline patchstyle::PlanarImage random_int_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
    patchstyle::PlanarImage img(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(lo, hi);
    for (double& v : img.data()) v = u(rng);
    return img;
}

inline patchstyle::ScalarField random_field(int w, int h, std::uint64_t seed, double lo, double hi) {
    patchstyle::ScalarField f(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : f.data()) v = u(rng);
    return f;
}

/// Smooth colour field plus noise: patches of this look like a texture
/// rather than white noise, which gives PCA something to compress.
inline patchstyle::PlanarImage smooth_texture(int w, int h, std::uint64_t seed) {
    patchstyle::PlanarImage img(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ph(0.0, 6.283), fr(0.05, 0.35);
    std::normal_distribution<double> noise(0.0, 6.0);
    double fx[3][3], fy[3][3], p[3][3];
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 3; ++k) {
            fx[c][k] = fr(rng);
            fy[c][k] = fr(rng);
            p[c][k] = ph(rng);
        }
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = 128.0;
                for (int k = 0; k < 3; ++k) v += 30.0 * std::sin(fx[c][k] * x + fy[c][k] * y + p[c][k]);
                img.at(c, y, x) = std::clamp(v + noise(rng), 0.0, 255.0);
            }
    return img;
}

}  // namespace testsupport
