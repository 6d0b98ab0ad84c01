#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace esci {

using Rng = std::mt19937_64;

/// Deterministically derives an independent sub-stream seed from a root seed,
/// a stream name and an index (e.g. run number or sensor id). All experiment
/// randomness flows through this so that every output is reproducible from
/// the root seed alone.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

/// 64-bit FNV-1a, used for config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace esci
