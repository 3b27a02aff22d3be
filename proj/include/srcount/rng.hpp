#pragma once

#include <cstdint>
#include <random>

namespace srcount {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream for (master seed, stream index). Frames, splits and
// layers each get their own stream so generation order never matters.
inline Rng substream(std::uint64_t master, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
}

inline Rng substream(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  return substream(splitmix64(master ^ splitmix64(tag)), index);
}

}  // namespace srcount
