#pragma once

#include <cstdint>
#include <random>

namespace driftprice {

using Rng = std::mt19937_64;

// Independent named streams derived from one replication seed.
enum class StreamTag : std::uint32_t {
  kPolicy = 1,
  kEnvironmentNoise = 2,
  kEnvironmentPath = 3,
  kPanel = 4,
};

inline Rng make_stream(std::uint64_t seed, StreamTag tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), 0x9e3779b9u};
  return Rng(seq);
}

}  // namespace driftprice
