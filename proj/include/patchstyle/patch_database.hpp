#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"
#include "patchstyle/patch.hpp"

namespace patchstyle {

using PointMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;  // one point per column

struct DatabaseConfig {
    double energy_fraction = 0.95;
    /// Spacing between style patch origins; 1 extracts every patch.
    int stride = 1;
    /// Upper bound on the number of patches used to fit the PCA basis.
    int pca_sample_cap = 1024;
};

/// All n x n patches of one style pyramid level, with a PCA projection that
/// keeps the requested fraction of the patch-set energy.
///
/// Raw patches are not copied: patch i is read back from `style` at
/// `origins[i]`.
struct PatchDatabase {
    int level = 1;
    int patch_size = 0;
    PlanarImage style;
    std::vector<Origin> origins;
    Eigen::VectorXd mean;          // D
    Eigen::MatrixXd projection;    // k x D, orthonormal rows
    Eigen::MatrixXf projection_f;  // float copy used for bulk projection
    PointMatrix projected;         // k x M
    /// Eigenvalues of the fitted patch covariance, descending, clamped >= 0.
    std::vector<double> spectrum;
    int pca_samples = 0;
    bool degenerate = false;

    [[nodiscard]] int dim() const noexcept { return 3 * patch_size * patch_size; }
    [[nodiscard]] int reduced_dim() const noexcept { return static_cast<int>(projection.rows()); }
    [[nodiscard]] int count() const noexcept { return static_cast<int>(origins.size()); }

    [[nodiscard]] Patch raw_patch(int i) const { return extract_patch(style, origins.at(i), patch_size); }

    /// Fraction of spectrum energy kept by the first reduced_dim() components.
    [[nodiscard]] double retained_energy() const {
        double total = 0.0, kept = 0.0;
        for (std::size_t i = 0; i < spectrum.size(); ++i) {
            total += spectrum[i];
            if (static_cast<int>(i) < reduced_dim()) kept += spectrum[i];
        }
        return total > 0.0 ? kept / total : 1.0;
    }

    /// E (x - m) in double precision.
    [[nodiscard]] Eigen::VectorXd project(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim()) throw DimensionError("project: wrong patch length");
        Eigen::Map<const Eigen::VectorXd> v(x.data(), dim());
        return projection * (v - mean);
    }

    /// Projects columns of raw patches (D x Q) in fixed-size chunks so the
    /// floating-point result is independent of thread count.
    [[nodiscard]] PointMatrix project_columns(const PointMatrix& raw) const {
        PointMatrix out(reduced_dim(), raw.cols());
        const Eigen::VectorXf mf = mean.cast<float>();
        constexpr Eigen::Index kChunk = 512;
        const Eigen::Index chunks = (raw.cols() + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
        for (Eigen::Index ch = 0; ch < chunks; ++ch) {
            const Eigen::Index b = ch * kChunk;
            const Eigen::Index len = std::min(kChunk, raw.cols() - b);
            PointMatrix centered = raw.middleCols(b, len).colwise() - mf;
            out.middleCols(b, len).noalias() = projection_f * centered;
        }
        return out;
    }
};

namespace detail {

inline void fill_patch_column(const PlanarImage& img, Origin o, int n, float* dst) {
    std::size_t k = 0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < n; ++y) {
            const double* row = img.row_ptr(c, o.row + y) + o.col;
            for (int x = 0; x < n; ++x) dst[k++] = static_cast<float>(row[x]);
        }
}

inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-12) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

// Two rounds of modified Gram-Schmidt on the rows, done on the columns of the
// transpose so every inner product runs over contiguous memory.
inline void orthonormalize_rows(Eigen::MatrixXd& e) {
    Eigen::MatrixXd t = e.transpose();
    for (int round = 0; round < 2; ++round) {
        for (Eigen::Index i = 0; i < t.cols(); ++i) {
            for (Eigen::Index j = 0; j < i; ++j) t.col(i) -= t.col(i).dot(t.col(j)) * t.col(j);
            t.col(i).normalize();
        }
    }
    e = t.transpose();
}

}  // namespace detail

/// Smallest k whose leading eigenvalues hold `fraction` of the total.
/// `spectrum` must be descending and nonnegative.
[[nodiscard]] inline int components_for_energy(const std::vector<double>& spectrum, double fraction) {
    double total = 0.0;
    for (double l : spectrum) total += l;
    if (total <= 0.0) return 0;
    const double target = fraction * total * (1.0 - 1e-12);
    double run = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        run += spectrum[i];
        if (run >= target) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(spectrum.size());
}

[[nodiscard]] inline std::vector<Origin> patch_origins(int w, int h, int n, int stride) {
    std::vector<Origin> out;
    for (int r = 0; r + n <= h; r += stride)
        for (int c = 0; c + n <= w; c += stride) out.push_back({r, c});
    return out;
}

[[nodiscard]] inline PatchDatabase build_database(const PlanarImage& style_level, int n,
                                                  const DatabaseConfig& cfg = {}, int level = 1) {
    if (n < 1 || style_level.width() < n || style_level.height() < n) {
        throw ConfigError("style level " + std::to_string(style_level.width()) + "x" +
                          std::to_string(style_level.height()) + " is smaller than patch size " +
                          std::to_string(n));
    }
    if (!(cfg.energy_fraction > 0.0 && cfg.energy_fraction <= 1.0)) {
        throw ConfigError("energy fraction must lie in (0, 1]");
    }
    if (cfg.stride < 1 || cfg.pca_sample_cap < 1) throw ConfigError("stride and sample cap must be >= 1");

    PatchDatabase db;
    db.level = level;
    db.patch_size = n;
    db.style = style_level;
    db.origins = patch_origins(style_level.width(), style_level.height(), n, cfg.stride);
    const int D = db.dim();
    const int M = db.count();

    // Mean over every patch.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
    {
        std::vector<double> buf(D);
        for (const Origin& o : db.origins) {
            copy_patch(style_level, o, n, buf);
            mean += Eigen::Map<const Eigen::VectorXd>(buf.data(), D);
        }
        mean /= static_cast<double>(M);
    }
    db.mean = mean;

    // Evenly spaced fitting sample.
    const int S = std::min(M, cfg.pca_sample_cap);
    db.pca_samples = S;
    Eigen::MatrixXd A(D, S);
    {
        std::vector<double> buf(D);
        for (int j = 0; j < S; ++j) {
            const auto idx = static_cast<std::size_t>(static_cast<std::int64_t>(j) * M / S);
            copy_patch(style_level, db.origins[idx], n, buf);
            A.col(j) = Eigen::Map<const Eigen::VectorXd>(buf.data(), D) - mean;
        }
    }

    std::vector<double> lambda;
    Eigen::MatrixXd vectors;  // D x r, column i pairs with lambda[i]
    if (S >= D) {
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
        cov.selfadjointView<Eigen::Lower>().rankUpdate(A);
        cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        for (Eigen::Index i = D - 1; i >= 0; --i) lambda.push_back(es.eigenvalues()[i]);
        vectors = es.eigenvectors().rowwise().reverse();
    } else {
        // Gram path: same nonzero spectrum, smaller matrix.
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(S, S);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
        gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        for (Eigen::Index i = S - 1; i >= 0; --i) lambda.push_back(es.eigenvalues()[i]);
        vectors = es.eigenvectors().rowwise().reverse();  // S x S, mapped to D below
    }
    const double lmax = lambda.empty() ? 0.0 : std::max(lambda.front(), 0.0);
    for (double& l : lambda) {
        if (l < 1e-10 * lmax || l < 0.0) l = 0.0;
    }
    db.spectrum = lambda;

    int k = components_for_energy(lambda, cfg.energy_fraction);
    Eigen::MatrixXd proj;
    if (k == 0) {
        std::clog << "patchstyle: warning: style level " << level << " has no patch variance for n="
                  << n << "; using a fixed 1-D projection\n";
        db.degenerate = true;
        proj = Eigen::MatrixXd::Zero(1, D);
        proj(0, 0) = 1.0;
    } else {
        proj.resize(k, D);
        for (int i = 0; i < k; ++i) {
            Eigen::VectorXd v = S >= D ? Eigen::VectorXd(vectors.col(i))
                                       : Eigen::VectorXd(A * vectors.col(i) / std::sqrt(lambda[i]));
            detail::fix_sign(v);
            proj.row(i) = v.transpose();
        }
        detail::orthonormalize_rows(proj);
        for (int i = 0; i < k; ++i) {
            Eigen::VectorXd v = proj.row(i).transpose();
            detail::fix_sign(v);
            proj.row(i) = v.transpose();
        }
    }
    db.projection = std::move(proj);
    db.projection_f = db.projection.cast<float>();

    // Project every patch, chunk by chunk.
    const int kk = db.reduced_dim();
    db.projected.resize(kk, M);
    constexpr int kChunk = 512;
    const Eigen::VectorXf mf = mean.cast<float>();
    const int chunks = (M + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < chunks; ++ch) {
        const int b = ch * kChunk;
        const int len = std::min(kChunk, M - b);
        PointMatrix raw(D, len);
        for (int j = 0; j < len; ++j) detail::fill_patch_column(style_level, db.origins[b + j], n, raw.col(j).data());
        raw.colwise() -= mf;
        db.projected.middleCols(b, len).noalias() = db.projection_f * raw;
    }
    return db;
}

}  // namespace patchstyle
