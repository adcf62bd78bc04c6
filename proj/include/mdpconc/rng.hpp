#pragma once

#include <cstdint>

namespace mdpconc {

// Counter-based generator: every draw is a pure hash of
// (seed, stream, counter), so simulations are reproducible across
// platforms, runs, and thread schedules.

namespace rng {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash3(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (stream + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (counter + 0x9e3779b97f4a7c15ULL));
  return h;
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return static_cast<double>(hash3(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Seed for run `run` of an experiment keyed by `base`.
inline std::uint64_t run_seed(std::uint64_t base, std::uint64_t run) {
  return mix64(base ^ mix64(run + 0x7f4a7c15ULL));
}

// Stream identifiers. Simulation and model generation share the hash but
// never the (stream, counter) pairs.
constexpr std::uint64_t kStreamInitial = 0;
constexpr std::uint64_t kStreamTransition = 1;
constexpr std::uint64_t kStreamLearner = 2;
constexpr std::uint64_t kStreamModelTransition = 16;
constexpr std::uint64_t kStreamModelReward = 17;
constexpr std::uint64_t kStreamModelPermutation = 18;
constexpr std::uint64_t kStreamPolicyDraw = 19;

}  // namespace rng

}  // namespace mdpconc
