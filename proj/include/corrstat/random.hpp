#pragma once

#include <cstdint>
#include <random>

namespace corrstat {

/// SplitMix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the substream addressed by (seed, replica, stream).
///
/// Each coordinate is folded through SplitMix64, so neighbouring replicas or series never
/// share or overlap state, and a substream does not depend on which other substreams exist.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t replica,
                                       std::uint64_t stream) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  h = splitmix64(h ^ (replica + 0x3c6ef372fe94f82bULL));
  h = splitmix64(h ^ (stream + 0xa54ff53a5f1d36f1ULL));
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t replica = 0, std::uint64_t stream = 0) {
  return Engine(substream_seed(seed, replica, stream));
}

}  // namespace corrstat
