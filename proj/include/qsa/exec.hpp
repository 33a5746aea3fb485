#pragma once

#include <cstdint>

namespace qsa {

/// Selects the serial reference loop or the OpenMP kernel. Both produce
/// bit-identical results; the serial path is kept for testing and benchmarks.
enum class Exec { serial, parallel };

/// SplitMix64 finalizer; derives independent per-task seeds from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace qsa
