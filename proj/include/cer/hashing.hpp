#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cer {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

// Stable per-item seed: hash of the experiment seed bytes followed by the id.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view id);

// Lowercase hex SHA-256; used for cache keys, checksums, and config hashes.
std::string sha256_hex(std::string_view data);

std::string to_hex(std::uint64_t value);

}  // namespace cer
