#pragma once

#include <cstdint>
#include <random>

namespace dsel {

// Independent random streams. Every draw in a run is keyed by
// (seed, stream, counter), so runs replay exactly and one consumer never
// shifts another's sequence.
enum class Stream : std::uint32_t {
  kGenericBatch = 1,
  kSpecificBatch = 2,
  kFilter = 3,
  kOuterSubsample = 4,
  kDiagnostics = 5,
  kData = 6,
  kPermutation = 7,
  kInit = 8,
  kClassifier = 9,
};

inline std::mt19937_64 stream_rng(std::uint64_t seed, Stream stream, std::uint64_t counter) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(counter),
                    static_cast<std::uint32_t>(counter >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace dsel
