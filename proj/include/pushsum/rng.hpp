#pragma once

#include <cstdint>
#include <random>

namespace pushsum {

using Engine = std::mt19937_64;

/// What a substream is used for. Values are part of the reproducibility
/// contract; do not renumber.
enum class Purpose : std::uint64_t {
  kWeights = 1,
  kSubstate = 2,
  kInitialValue = 3,
  kTopology = 4,
};

/// Counter-based substream seed: splitmix64 folded over
/// (master, node, round, purpose). Any single node's draws for a given round
/// can be replayed without touching the rest of the run.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t node, std::uint64_t round,
                             Purpose purpose);

inline Engine substream(std::uint64_t master, std::uint64_t node, std::uint64_t round,
                        Purpose purpose) {
  return Engine(substream_seed(master, node, round, purpose));
}

/// Uniform draw on the open interval (0, 1).
double uniform_open(Engine& rng);

}  // namespace pushsum
