#pragma once

#include <cstdint>
#include <random>

namespace hogdiff {

// Deterministic random source. The engine (mt19937_64) is fully specified by
// the standard and the transforms below are hand-rolled, so streams are
// bit-reproducible across platforms and standard libraries.
//
// Parallel work derives one stream per trajectory from (root seed, stream
// index); results depend only on that pair, never on thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for trajectory `index` under `root_seed`.
  static Rng stream(std::uint64_t root_seed, std::uint64_t index);

  // Uniform on [0, 1).
  double uniform();

  // Standard normal via Box-Muller (cosine branch, no cached state).
  double gauss();

  // Uniform integer on [0, bound); rejection sampling, no modulo bias.
  std::uint64_t integer(std::uint64_t bound);

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 mixing step; used for seed derivation and config hashing.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hogdiff
