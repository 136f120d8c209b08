#pragma once

#include <cstdint>
#include <string>

namespace gapflight {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a over a string; used to stamp artifact files with a hash of the
/// resolved configuration they were produced under.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace gapflight
