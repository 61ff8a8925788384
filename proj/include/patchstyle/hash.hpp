#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>

namespace patchstyle {

/// 64-bit FNV-1a, used for cache keys and manifest file digests.
class Fnv1a {
public:
    Fnv1a& bytes(const void* p, std::size_t n) noexcept {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    template <class T>
    Fnv1a& value(const T& v) noexcept {
        return bytes(&v, sizeof(T));
    }

    template <class T>
    Fnv1a& values(std::span<const T> v) noexcept {
        return bytes(v.data(), v.size_bytes());
    }

    [[nodiscard]] std::uint64_t digest() const noexcept { return h_; }

    [[nodiscard]] std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
        return buf;
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace patchstyle
