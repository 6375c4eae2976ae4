#pragma once

#include <filesystem>

#include "deconfound/model/network.hpp"

namespace dcfd::model {

// Binary checkpoint layout (all integers little-endian):
//   bytes 0..7   magic "DCFD0001"
//   bytes 8..15  u64 header length in bytes
//   header       u64 spec fingerprint
//                u32 tensor count
//                per tensor: u32 name length, name bytes,
//                            u32 rank, u64 dims...,
//                            u64 payload offset (bytes from payload start)
//   payload      f64 values, row-major, bit-exact
//
// Values round-trip bit-for-bit. Truncated or malformed files and
// fingerprint mismatches raise data errors.
void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params);

// Reads a checkpoint without an expected spec; structural validation only.
NetworkParams load_checkpoint(const std::filesystem::path& path);

// Reads a checkpoint and verifies it belongs to `expected`.
NetworkParams load_checkpoint(const std::filesystem::path& path, const VariantSpec& expected);

}  // namespace dcfd::model
