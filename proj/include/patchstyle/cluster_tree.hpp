#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "patchstyle/error.hpp"
#include "patchstyle/patch_database.hpp"

namespace patchstyle {

struct TreeConfig {
    int branching = 4;
    int leaf_capacity = 256;
    /// Upper bound on extra memberships per split, as a fraction of the node.
    double overlap_fraction = 0.5;
    /// A point also joins (and a query also descends into) every cluster whose
    /// centroid is within this factor of the nearest centroid distance.
    double explore_ratio = 1.2;
    int kmeans_iterations = 8;
    /// Points used to fit the k-means centroids of a node.
    int kmeans_sample = 2048;
    int max_depth = 24;
    /// Search stops opening leaves once this many points were scanned;
    /// 0 scans every leaf the descent rule admits.
    int max_checks = 4096;
    std::uint64_t seed = 0;
};

struct TreeNode {
    std::vector<float> centroid;
    std::vector<int> children;  // empty for leaves
    std::vector<int> members;   // set for leaves only

    [[nodiscard]] bool is_leaf() const noexcept { return children.empty(); }
};

/// Hierarchical k-means tree over the columns of a point matrix, where sibling
/// member sets may overlap.
struct ClusterTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int dims = 0;
    double explore_ratio = 1.2;
    int max_checks = 0;

    [[nodiscard]] std::vector<int> leaves() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].is_leaf()) out.push_back(static_cast<int>(i));
        return out;
    }
};

namespace detail {

// Eight independent lanes so the compiler can vectorise without reassociating;
// the lane sums are combined in a fixed order.
inline float dist_sq(const float* a, const float* b, int k) noexcept {
    float acc[8] = {};
    int i = 0;
    for (; i + 8 <= k; i += 8) {
        for (int j = 0; j < 8; ++j) {
            const float d = a[i + j] - b[i + j];
            acc[j] += d * d;
        }
    }
    for (int j = 0; i < k; ++i, ++j) {
        const float d = a[i] - b[i];
        acc[j] += d * d;
    }
    return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t node) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (node + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// k-means++ seeding and Lloyd iterations on a subset of columns.
inline std::vector<std::vector<float>> kmeans(const PointMatrix& pts, const std::vector<int>& fit,
                                              int k, int iterations, std::uint64_t seed) {
    const int dims = static_cast<int>(pts.rows());
    std::mt19937_64 rng(seed);
    std::vector<std::vector<float>> cent;
    std::vector<double> d2(fit.size(), std::numeric_limits<double>::infinity());
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, fit.size() - 1)(rng);
    cent.emplace_back(pts.col(fit[first]).data(), pts.col(fit[first]).data() + dims);
    while (static_cast<int>(cent.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < fit.size(); ++i) {
            d2[i] = std::min(d2[i], static_cast<double>(dist_sq(pts.col(fit[i]).data(), cent.back().data(), dims)));
            total += d2[i];
        }
        if (total <= 0.0) break;  // every point coincides with a centroid
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = fit.size() - 1;
        for (std::size_t i = 0; i < fit.size(); ++i) {
            u -= d2[i];
            if (u < 0.0) {
                pick = i;
                break;
            }
        }
        cent.emplace_back(pts.col(fit[pick]).data(), pts.col(fit[pick]).data() + dims);
    }
    const int kk = static_cast<int>(cent.size());
    std::vector<int> assign(fit.size(), -1);
    for (int it = 0; it < iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < fit.size(); ++i) {
            int best = 0;
            float bd = std::numeric_limits<float>::infinity();
            for (int c = 0; c < kk; ++c) {
                const float d = dist_sq(pts.col(fit[i]).data(), cent[c].data(), dims);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (assign[i] != best) changed = true;
            assign[i] = best;
        }
        if (!changed && it > 0) break;
        std::vector<std::vector<double>> sum(kk, std::vector<double>(dims, 0.0));
        std::vector<int> cnt(kk, 0);
        for (std::size_t i = 0; i < fit.size(); ++i) {
            const float* p = pts.col(fit[i]).data();
            auto& s = sum[assign[i]];
            for (int d = 0; d < dims; ++d) s[d] += p[d];
            ++cnt[assign[i]];
        }
        for (int c = 0; c < kk; ++c) {
            if (cnt[c] == 0) continue;  // keep the previous centroid
            for (int d = 0; d < dims; ++d) cent[c][d] = static_cast<float>(sum[c][d] / cnt[c]);
        }
    }
    return cent;
}

}  // namespace detail

/// Recursive k-means with overlapping children. After the primary
/// assignment, a point also joins every other cluster whose centroid is within
/// `explore_ratio` times its primary centroid distance, closest ratios first,
/// until the extra memberships reach `overlap_fraction` of the node size.
[[nodiscard]] inline ClusterTree build_tree(const PointMatrix& pts, const TreeConfig& cfg = {}) {
    if (cfg.branching < 2) throw ConfigError("tree branching must be >= 2");
    if (cfg.leaf_capacity < 1) throw ConfigError("tree leaf capacity must be >= 1");
    if (cfg.overlap_fraction < 0.0 || cfg.explore_ratio < 1.0) {
        throw ConfigError("tree overlap must be >= 0 and exploration ratio >= 1");
    }
    if (cfg.max_checks < 0) throw ConfigError("tree max_checks must be >= 0");
    const int dims = static_cast<int>(pts.rows());
    const int count = static_cast<int>(pts.cols());
    ClusterTree tree;
    tree.dims = dims;
    tree.explore_ratio = cfg.explore_ratio;
    tree.max_checks = cfg.max_checks;

    TreeNode root;
    root.centroid.assign(dims, 0.0f);
    if (count > 0) {
        Eigen::VectorXf m = pts.rowwise().mean();
        root.centroid.assign(m.data(), m.data() + dims);
    }
    std::vector<int> all(count);
    for (int i = 0; i < count; ++i) all[i] = i;
    tree.nodes.push_back(std::move(root));

    struct Pending {
        int node;
        int depth;
        std::vector<int> members;
    };
    std::vector<Pending> work;
    work.push_back({0, 0, std::move(all)});
    while (!work.empty()) {
        Pending job = std::move(work.back());
        work.pop_back();
        const int size = static_cast<int>(job.members.size());
        if (size <= cfg.leaf_capacity || job.depth >= cfg.max_depth) {
            tree.nodes[job.node].members = std::move(job.members);
            continue;
        }
        std::vector<int> fit;
        if (size <= cfg.kmeans_sample) {
            fit = job.members;
        } else {
            fit.reserve(cfg.kmeans_sample);
            for (int j = 0; j < cfg.kmeans_sample; ++j) {
                fit.push_back(job.members[static_cast<std::size_t>(static_cast<std::int64_t>(j) * size / cfg.kmeans_sample)]);
            }
        }
        const auto cent = detail::kmeans(pts, fit, cfg.branching, cfg.kmeans_iterations,
                                         detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(job.node)));
        const int kk = static_cast<int>(cent.size());
        std::vector<std::vector<int>> groups(kk);
        struct Extra {
            float ratio;
            int member;
            int cluster;
        };
        std::vector<Extra> extras;
        std::vector<float> d(kk);
        for (int m : job.members) {
            int best = 0;
            for (int c = 0; c < kk; ++c) {
                d[c] = std::sqrt(detail::dist_sq(pts.col(m).data(), cent[c].data(), dims));
                if (d[c] < d[best]) best = c;
            }
            groups[best].push_back(m);
            for (int c = 0; c < kk; ++c) {
                if (c == best) continue;
                if (d[c] <= cfg.explore_ratio * d[best]) {
                    extras.push_back({d[best] > 0.0f ? d[c] / d[best] : 1.0f, m, c});
                }
            }
        }
        std::sort(extras.begin(), extras.end(), [](const Extra& a, const Extra& b) {
            return std::tie(a.ratio, a.member, a.cluster) < std::tie(b.ratio, b.member, b.cluster);
        });
        const auto cap = static_cast<std::size_t>(cfg.overlap_fraction * size);
        if (extras.size() > cap) extras.resize(cap);
        for (const Extra& e : extras) groups[e.cluster].push_back(e.member);

        int nonempty = 0;
        for (const auto& g : groups) nonempty += !g.empty();
        if (nonempty < 2) {
            tree.nodes[job.node].members = std::move(job.members);
            continue;
        }
        for (int c = 0; c < kk; ++c) {
            if (groups[c].empty()) continue;
            std::sort(groups[c].begin(), groups[c].end());
            TreeNode child;
            child.centroid = cent[c];
            const int id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(std::move(child));
            tree.nodes[job.node].children.push_back(id);
            // A child as large as its parent would never shrink.
            const int child_depth = static_cast<int>(groups[c].size()) >= size ? cfg.max_depth : job.depth + 1;
            work.push_back({id, child_depth, std::move(groups[c])});
        }
    }
    return tree;
}

struct TreeHit {
    int index = -1;
    float dist_sq = std::numeric_limits<float>::infinity();
    int leaves_visited = 0;
};

/// Best-first descent. At each inner node only the children whose centroid
/// lies within `explore_ratio` of the closest child are admitted; admitted
/// nodes are opened nearest-centroid first, and leaves are scanned until
/// `max_checks` points have been seen. Ties resolve to the lowest point index.
[[nodiscard]] inline TreeHit search_tree(const ClusterTree& tree, const PointMatrix& pts,
                                         const float* q) {
    TreeHit hit;
    if (tree.nodes.empty()) return hit;
    const int dims = tree.dims;
    const float ratio_sq = static_cast<float>(tree.explore_ratio * tree.explore_ratio);
    using Entry = std::pair<float, int>;  // (centroid distance, node)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    open.push({0.0f, 0});
    std::vector<float> cd;
    long checked = 0;
    while (!open.empty()) {
        const TreeNode& node = tree.nodes[open.top().second];
        open.pop();
        if (node.is_leaf()) {
            ++hit.leaves_visited;
            for (int m : node.members) {
                const float dd = detail::dist_sq(pts.col(m).data(), q, dims);
                if (dd < hit.dist_sq || (dd == hit.dist_sq && m < hit.index)) {
                    hit.dist_sq = dd;
                    hit.index = m;
                }
            }
            checked += static_cast<long>(node.members.size());
            if (tree.max_checks > 0 && checked >= tree.max_checks && hit.index >= 0) break;
            continue;
        }
        cd.resize(node.children.size());
        float best = std::numeric_limits<float>::infinity();
        for (std::size_t c = 0; c < node.children.size(); ++c) {
            cd[c] = detail::dist_sq(tree.nodes[node.children[c]].centroid.data(), q, dims);
            best = std::min(best, cd[c]);
        }
        for (std::size_t c = 0; c < node.children.size(); ++c) {
            if (cd[c] <= ratio_sq * best) open.push({cd[c], node.children[c]});
        }
    }
    return hit;
}

/// Exact scan of every point; ties resolve to the lowest index.
[[nodiscard]] inline TreeHit scan_all(const PointMatrix& pts, const float* q) {
    TreeHit hit;
    const int dims = static_cast<int>(pts.rows());
    for (Eigen::Index m = 0; m < pts.cols(); ++m) {
        const float dd = detail::dist_sq(pts.col(m).data(), q, dims);
        if (dd < hit.dist_sq) {
            hit.dist_sq = dd;
            hit.index = static_cast<int>(m);
        }
    }
    hit.leaves_visited = 1;
    return hit;
}

}  // namespace patchstyle
