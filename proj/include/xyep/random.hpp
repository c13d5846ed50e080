#pragma once

#include <cstdint>
#include <random>

namespace xyep {

using Rng = std::mt19937_64;

// splitmix64 finalizer over (master, stream); used to give every replicate and
// every consumer (data, initial states, evaluation) its own stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stream ids inside one training run.
enum class Stream : std::uint64_t { Parameters = 1, Data = 2, InitialStates = 3, Evaluation = 4 };

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(stream)));
}

}  // namespace xyep
