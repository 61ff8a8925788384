#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "patchstyle/cluster_tree.hpp"
#include "patchstyle/error.hpp"
#include "patchstyle/hash.hpp"
#include "patchstyle/patch.hpp"
#include "patchstyle/patch_database.hpp"

namespace patchstyle {

/// Nearest style patch for one query.
struct MatchResult {
    Patch patch;          // raw style patch z_ij
    Origin style_origin;  // where it came from
    int index = -1;       // column in the database
    double distance = 0.0;
};

struct IndexConfig {
    DatabaseConfig database;
    TreeConfig tree;
    /// Scan every projected patch instead of descending the tree.
    bool exhaustive = false;
};

/// Searchable style patches for one (level, patch size).
struct PatchIndex {
    PatchDatabase db;
    ClusterTree tree;
    bool exhaustive = false;

    [[nodiscard]] TreeHit search_projected(const float* q) const {
        return exhaustive ? scan_all(db.projected, q) : search_tree(tree, db.projected, q);
    }
};

[[nodiscard]] inline PatchIndex build_index(const PlanarImage& style_level, int n, const IndexConfig& cfg,
                                            int level = 1) {
    PatchIndex idx;
    idx.db = build_database(style_level, n, cfg.database, level);
    idx.exhaustive = cfg.exhaustive;
    if (!cfg.exhaustive) {
        idx.tree = build_tree(idx.db.projected, cfg.tree);
    } else {
        TreeConfig single = cfg.tree;
        single.leaf_capacity = std::max(1, idx.db.count());
        idx.tree = build_tree(idx.db.projected, single);
    }
    return idx;
}

[[nodiscard]] inline MatchResult make_match(const PatchDatabase& db, int index, double distance) {
    return {db.raw_patch(index), db.origins[index], index, distance};
}

/// Approximate nearest neighbour: projects the query into the PCA space and
/// searches the tree there. The returned patch is the raw, unprojected one.
[[nodiscard]] inline MatchResult query_nn(const PatchIndex& idx, const Patch& query) {
    if (query.size != idx.db.patch_size || query.values.size() != Patch::length(query.size)) {
        throw DimensionError("query_nn: query size does not match the database");
    }
    const Eigen::VectorXf q = idx.db.project(query.values).cast<float>();
    const TreeHit hit = idx.search_projected(q.data());
    return make_match(idx.db, hit.index, std::sqrt(static_cast<double>(hit.dist_sq)));
}

/// Exact full-dimensional nearest neighbour; ties go to the lowest index.
[[nodiscard]] inline MatchResult brute_force_nn(const PatchDatabase& db, const Patch& query) {
    if (query.size != db.patch_size || query.values.size() != Patch::length(query.size)) {
        throw DimensionError("brute_force_nn: query size does not match the database");
    }
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < db.count(); ++i) {
        const double d = patch_residual_sq(db.style, db.origins[i], db.patch_size, query.values);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return make_match(db, best, std::sqrt(bd));
}

// ---------------------------------------------------------------------------
// Binary cache
//
// Layout (little endian, native floats):
//   char[8]  magic "PSTIDX\0\0"
//   u32      format version
//   u64      key (hash of style level pixels and every build parameter)
//   i32      level, patch size, exhaustive flag, degenerate flag, pca samples
//   i32      D, k, M
//   f64[D]   mean
//   f64[k*D] projection (column-major)
//   f64[S]   spectrum (u64 length prefix)
//   i32[2M]  origins (row, col)
//   f32[k*M] projected
//   i32      tree dims, f64 explore ratio, i32 max checks, u64 node count, then per node:
//            f32[dims] centroid, u64 + i32[] children, u64 + i32[] members
// The style image is not stored; the key ties the file to it.

inline constexpr std::uint32_t kIndexFormatVersion = 2;
inline constexpr char kIndexMagic[8] = {'P', 'S', 'T', 'I', 'D', 'X', 0, 0};

[[nodiscard]] inline std::uint64_t index_key(const PlanarImage& style_level, int n, const IndexConfig& cfg) {
    Fnv1a h;
    h.value(style_level.width()).value(style_level.height()).values(style_level.data());
    h.value(n).value(cfg.database.energy_fraction).value(cfg.database.stride).value(cfg.database.pca_sample_cap);
    h.value(cfg.exhaustive);
    if (!cfg.exhaustive) {
        h.value(cfg.tree.branching).value(cfg.tree.leaf_capacity).value(cfg.tree.overlap_fraction);
        h.value(cfg.tree.explore_ratio).value(cfg.tree.kmeans_iterations).value(cfg.tree.kmeans_sample);
        h.value(cfg.tree.max_depth).value(cfg.tree.max_checks).value(cfg.tree.seed);
    }
    h.value(kIndexFormatVersion);
    return h.digest();
}

namespace detail {

class BinWriter {
public:
    explicit BinWriter(std::ofstream& out) : out_(out) {}
    template <class T>
    void put(const T& v) { out_.write(reinterpret_cast<const char*>(&v), sizeof(T)); }
    template <class T>
    void put_array(const T* p, std::size_t n) { out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(T))); }
    template <class T>
    void put_vector(const std::vector<T>& v) {
        put<std::uint64_t>(v.size());
        put_array(v.data(), v.size());
    }

private:
    std::ofstream& out_;
};

class BinReader {
public:
    explicit BinReader(std::ifstream& in) : in_(in) {}
    template <class T>
    T get() {
        T v{};
        read(&v, 1);
        return v;
    }
    template <class T>
    void read(T* p, std::size_t n) {
        in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(T)));
        if (!in_) throw IoError("truncated index file");
    }
    template <class T>
    std::vector<T> get_vector(std::uint64_t limit) {
        const auto n = get<std::uint64_t>();
        if (n > limit) throw IoError("corrupt index file");
        std::vector<T> v(n);
        read(v.data(), v.size());
        return v;
    }

private:
    std::ifstream& in_;
};

}  // namespace detail

inline void save_index(const PatchIndex& idx, std::uint64_t key, const std::filesystem::path& path) {
    const auto tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write index cache " + tmp.string());
        detail::BinWriter w(out);
        const auto& db = idx.db;
        out.write(kIndexMagic, sizeof kIndexMagic);
        w.put(kIndexFormatVersion);
        w.put(key);
        w.put<std::int32_t>(db.level);
        w.put<std::int32_t>(db.patch_size);
        w.put<std::int32_t>(idx.exhaustive);
        w.put<std::int32_t>(db.degenerate);
        w.put<std::int32_t>(db.pca_samples);
        w.put<std::int32_t>(db.dim());
        w.put<std::int32_t>(db.reduced_dim());
        w.put<std::int32_t>(db.count());
        w.put_array(db.mean.data(), static_cast<std::size_t>(db.mean.size()));
        w.put_array(db.projection.data(), static_cast<std::size_t>(db.projection.size()));
        w.put_vector(db.spectrum);
        for (const Origin& o : db.origins) {
            w.put<std::int32_t>(o.row);
            w.put<std::int32_t>(o.col);
        }
        w.put_array(db.projected.data(), static_cast<std::size_t>(db.projected.size()));
        w.put<std::int32_t>(idx.tree.dims);
        w.put(idx.tree.explore_ratio);
        w.put<std::int32_t>(idx.tree.max_checks);
        w.put<std::uint64_t>(idx.tree.nodes.size());
        for (const TreeNode& node : idx.tree.nodes) {
            w.put_array(node.centroid.data(), node.centroid.size());
            w.put_vector(node.children);
            w.put_vector(node.members);
        }
        if (!out) throw IoError("failed writing index cache " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Loads a cached index built from `style_level` with key `key`. Returns
/// nothing when the file is missing, from another format version, or was
/// built from different inputs.
[[nodiscard]] inline std::optional<PatchIndex> load_index(const std::filesystem::path& path,
                                                          std::uint64_t key, const PlanarImage& style_level) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        detail::BinReader r(in);
        char magic[8];
        r.read(magic, 8);
        if (std::memcmp(magic, kIndexMagic, 8) != 0) return std::nullopt;
        if (r.get<std::uint32_t>() != kIndexFormatVersion) return std::nullopt;
        if (r.get<std::uint64_t>() != key) return std::nullopt;
        PatchIndex idx;
        auto& db = idx.db;
        db.level = r.get<std::int32_t>();
        db.patch_size = r.get<std::int32_t>();
        idx.exhaustive = r.get<std::int32_t>() != 0;
        db.degenerate = r.get<std::int32_t>() != 0;
        db.pca_samples = r.get<std::int32_t>();
        const int D = r.get<std::int32_t>();
        const int k = r.get<std::int32_t>();
        const int M = r.get<std::int32_t>();
        if (D != db.dim() || k < 1 || k > D || M < 1) return std::nullopt;
        db.style = style_level;
        db.mean.resize(D);
        r.read(db.mean.data(), D);
        db.projection.resize(k, D);
        r.read(db.projection.data(), static_cast<std::size_t>(k) * D);
        db.projection_f = db.projection.cast<float>();
        db.spectrum = r.get_vector<double>(static_cast<std::uint64_t>(D) + M);
        db.origins.resize(M);
        for (Origin& o : db.origins) {
            o.row = r.get<std::int32_t>();
            o.col = r.get<std::int32_t>();
            if (!patch_fits(style_level, o, db.patch_size)) return std::nullopt;
        }
        db.projected.resize(k, M);
        r.read(db.projected.data(), static_cast<std::size_t>(k) * M);
        idx.tree.dims = r.get<std::int32_t>();
        idx.tree.explore_ratio = r.get<double>();
        idx.tree.max_checks = r.get<std::int32_t>();
        const auto nodes = r.get<std::uint64_t>();
        if (idx.tree.dims != k || nodes > 64ULL * M + 1) return std::nullopt;
        idx.tree.nodes.resize(nodes);
        for (TreeNode& node : idx.tree.nodes) {
            node.centroid.resize(k);
            r.read(node.centroid.data(), k);
            node.children = r.get_vector<int>(nodes);
            node.members = r.get_vector<int>(static_cast<std::uint64_t>(M));
            for (int c : node.children)
                if (c < 0 || static_cast<std::uint64_t>(c) >= nodes) return std::nullopt;
            for (int m : node.members)
                if (m < 0 || m >= M) return std::nullopt;
        }
        return idx;
    } catch (const IoError&) {
        return std::nullopt;
    }
}

}  // namespace patchstyle
