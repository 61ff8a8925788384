#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"

namespace patchstyle {

/// 256-bin histogram of one channel plus its normalised CDF.
struct ChannelHistogram {
    std::array<std::uint64_t, 256> counts{};
    std::array<double, 256> cdf{};
    std::uint64_t total = 0;

    [[nodiscard]] static int bin_of(double v) noexcept {
        return static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0)));
    }

    [[nodiscard]] static ChannelHistogram of(std::span<const double> plane) {
        ChannelHistogram h;
        for (double v : plane) ++h.counts[bin_of(v)];
        h.total = plane.size();
        std::uint64_t run = 0;
        for (int b = 0; b < 256; ++b) {
            run += h.counts[b];
            h.cdf[b] = h.total ? static_cast<double>(run) / static_cast<double>(h.total) : 0.0;
        }
        if (h.total) h.cdf[255] = 1.0;
        return h;
    }
};

/// Inverse of a reference channel's CDF.
///
/// Picks the lowest bin whose CDF reaches the quantile and places the value
/// inside that bin in proportion to how far into the bin's mass the quantile
/// falls, so rounding recovers the bin and neighbouring quantiles stay apart.
class ReferenceInverse {
public:
    explicit ReferenceInverse(const ChannelHistogram& ref) : ref_(ref) {}

    [[nodiscard]] double operator()(double u) const noexcept {
        // Relative slack absorbs rounding in the CDF sums without letting a
        // positive quantile land in an empty leading bin.
        const double target = u * (1.0 - 1e-12);
        int j = 0;
        while (j < 255 && ref_.cdf[j] < target) ++j;
        const double lo = j > 0 ? ref_.cdf[j - 1] : 0.0;
        const double mass = ref_.cdf[j] - lo;
        const double t = mass > 0.0 ? std::clamp((u - lo) / mass, 0.0, 1.0) : 1.0;
        return std::clamp(j - 0.499 + 0.998 * t, 0.0, 255.0);
    }

private:
    ChannelHistogram ref_;
};

/// 3x3 box mean of one plane with replicated borders.
[[nodiscard]] inline std::vector<double> local_mean3(std::span<const double> plane, int w, int h) {
    std::vector<double> rows(plane.size()), out(plane.size());
    for (int y = 0; y < h; ++y) {
        const double* r = plane.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            rows[static_cast<std::size_t>(y) * w + x] = r[std::max(x - 1, 0)] + r[x] + r[std::min(x + 1, w - 1)];
    }
    for (int y = 0; y < h; ++y) {
        const std::size_t up = static_cast<std::size_t>(std::max(y - 1, 0)) * w;
        const std::size_t mid = static_cast<std::size_t>(y) * w;
        const std::size_t dn = static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
        for (int x = 0; x < w; ++x) out[mid + x] = (rows[up + x] + rows[mid + x] + rows[dn + x]) / 9.0;
    }
    return out;
}

/// Source quantile of every pixel of one plane.
///
/// Pixels are ranked by value and, among equal values, by their 3x3 local
/// mean. Each pixel gets the fraction of pixels whose (value, mean) key does
/// not exceed its own. Ranking on the raw value handles estimates outside
/// [0, 255] without folding their tails onto the end bins. The secondary key
/// matters for images that are mostly copies of 8-bit patches: a map of the
/// value alone sends a whole intensity level to one output and cannot
/// reproduce the reference histogram. Pixels that tie on both keys share a
/// quantile, so a constant source lands on the reference maximum.
[[nodiscard]] inline std::vector<double> source_quantiles(std::span<const double> plane, int w, int h) {
    const std::size_t n = plane.size();
    std::vector<double> u(n);
    if (n == 0) return u;
    const auto mean = local_mean3(plane, w, h);
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    auto key_less = [&](std::uint32_t a, std::uint32_t b) {
        if (plane[a] != plane[b]) return plane[a] < plane[b];
        return mean[a] < mean[b];
    };
    std::sort(order.begin(), order.end(), key_less);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && !key_less(order[i], order[j])) ++j;
        const double q = static_cast<double>(j) / static_cast<double>(n);
        for (std::size_t k = i; k < j; ++k) u[order[k]] = q;
        i = j;
    }
    return u;
}

/// Per-channel histogram specification of `src` onto the palette of `ref`.
/// The result is nondecreasing in the source intensity within each channel.
[[nodiscard]] inline PlanarImage match_histogram(const PlanarImage& src, const PlanarImage& ref) {
    if (src.empty() || ref.empty()) throw DimensionError("match_histogram: empty image");
    PlanarImage out(src.width(), src.height());
    for (int c = 0; c < 3; ++c) {
        const ReferenceInverse inverse(ChannelHistogram::of(ref.plane(c)));
        const auto u = source_quantiles(src.plane(c), src.width(), src.height());
        auto o = out.plane(c);
        for (std::size_t i = 0; i < u.size(); ++i) o[i] = inverse(u[i]);
    }
    return out;
}

/// Mean over RGB of the L1 distance between normalised 256-bin histograms.
/// Lies in [0, 2].
[[nodiscard]] inline double histogram_distance(const PlanarImage& a, const PlanarImage& b) {
    if (a.empty() || b.empty()) throw DimensionError("histogram_distance: empty image");
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto ha = ChannelHistogram::of(a.plane(c));
        const auto hb = ChannelHistogram::of(b.plane(c));
        double d = 0.0;
        for (int k = 0; k < 256; ++k) {
            d += std::abs(static_cast<double>(ha.counts[k]) / static_cast<double>(ha.total) -
                          static_cast<double>(hb.counts[k]) / static_cast<double>(hb.total));
        }
        total += d;
    }
    return total / 3.0;
}

}  // namespace patchstyle
