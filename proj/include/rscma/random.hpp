#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rscma {

// splitmix64 finalizer; used to derive independent sub-streams from a run seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

// Stream tags keep topology, fading and error draws decorrelated for one seed.
enum class StreamTag : std::uint64_t {
  kRrhPlacement = 1,
  kUserPlacement = 2,
  kFading = 3,
  kLosPhase = 4,
  kError = 5,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, StreamTag tag,
                                   std::initializer_list<std::uint64_t> index = {}) {
  std::uint64_t h = derive_seed({seed, static_cast<std::uint64_t>(tag)});
  for (std::uint64_t i : index) h = derive_seed({h, i});
  return std::mt19937_64(h);
}

}  // namespace rscma
