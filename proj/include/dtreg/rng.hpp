#pragma once

#include <cstdint>
#include <random>

namespace dtreg {

using Rng = std::mt19937_64;

// Independent stream keyed by (seed, stream, substream). Parallel tasks each
// derive their own stream from their index, so results do not depend on the
// order in which tasks run.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0,
                       std::uint64_t substream = 0) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
      static_cast<std::uint32_t>(substream),
      static_cast<std::uint32_t>(substream >> 32), 0x64747267u};
  return Rng(seq);
}

}  // namespace dtreg
