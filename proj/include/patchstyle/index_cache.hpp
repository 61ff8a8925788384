#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "patchstyle/hash.hpp"
#include "patchstyle/patch_index.hpp"
#include "patchstyle/synthesis.hpp"

namespace patchstyle {

/// Directory of prebuilt indices, one file per (level, patch size, inputs).
/// Entries are keyed on the style pixels and every build parameter, so a
/// stale file is simply rebuilt.
class IndexCache {
public:
    explicit IndexCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
    }

    [[nodiscard]] std::shared_ptr<const PatchIndex> get(const PlanarImage& style_level, int level, int n,
                                                        const IndexConfig& cfg) {
        const std::uint64_t key = index_key(style_level, n, cfg);
        Fnv1a h;
        h.value(key);
        const auto path = dir_ / ("index_L" + std::to_string(level) + "_n" + std::to_string(n) + "_" + h.hex() + ".bin");
        if (auto idx = load_index(path, key, style_level)) {
            ++hits_;
            return std::make_shared<const PatchIndex>(std::move(*idx));
        }
        auto built = std::make_shared<const PatchIndex>(build_index(style_level, n, cfg, level));
        save_index(*built, key, path);
        ++builds_;
        return built;
    }

    [[nodiscard]] IndexProvider provider() {
        return [this](const PlanarImage& s, int level, int n, const IndexConfig& cfg) { return get(s, level, n, cfg); };
    }

    [[nodiscard]] int hits() const noexcept { return hits_; }
    [[nodiscard]] int builds() const noexcept { return builds_; }
    [[nodiscard]] const std::filesystem::path& directory() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    int hits_ = 0;
    int builds_ = 0;
};

}  // namespace patchstyle
