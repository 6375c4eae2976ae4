#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dcfd {

// Error taxonomy mirrored by the CLI exit codes: ConfigError -> 2,
// DataError -> 3, NumericError -> 4. Programmer contract violations
// (shape mismatches, consumed tapes, ...) use std:: exception types.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit hash; used for configuration fingerprints. Stable across
// platforms, cheap, and good enough to detect mismatched spec/checkpoint
// pairings (not a cryptographic guarantee).
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(std::uint64_t v);
std::uint64_t from_hex(std::string_view s);

// Mixes a base seed with a stream index so derived RNG streams
// (per run, per epoch, ...) are decorrelated but reproducible.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace dcfd
