#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace featforge {

// FNV-1a, 64-bit. Stable across platforms and runs; used for program ids,
// prompt hashes and manifest fingerprints.
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64 finalizer; combines two hashes into one.
constexpr std::uint64_t mix_hash(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull + (b << 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::string to_hex(std::uint64_t value);

inline std::string hash_hex(std::string_view data) { return to_hex(fnv1a64(data)); }

}  // namespace featforge
