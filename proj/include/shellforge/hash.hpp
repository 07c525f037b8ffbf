#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <string_view>

namespace shellforge {

// FNV-1a 64-bit. Used for reproducibility fingerprints, not security.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(std::uint64_t v);

// Hash of a file's raw bytes; throws std::runtime_error if unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace shellforge
