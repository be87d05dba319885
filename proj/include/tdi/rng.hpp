#pragma once

#include <cstdint>
#include <random>

namespace tdi {

/// Independent random streams. Each purpose gets its own tag so that, e.g.,
/// enabling noise never shifts the reflectivity draws of the same scene.
enum class Stream : std::uint32_t {
  Silhouette = 1,
  Reflectivity = 2,
  Selection = 3,
  Noise = 4,
  Init = 5,
  Shuffle = 6,
};

/// Generator for item `index` of a run seeded with `base`; the item seed is base + index.
inline std::mt19937_64 make_rng(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
  const std::uint64_t s = base + index;
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace tdi
