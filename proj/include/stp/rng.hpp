#pragma once

#include <cstdint>
#include <random>

namespace stp {

/// One step of the SplitMix64 sequence; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Fixed 64-bit mix of a base seed with two stream coordinates. Sweep point i,
/// run j uses mix_seed(base, i, j).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

/// Seeded generator with platform-independent derived draws.
///
/// std::uniform_*_distribution output is implementation-defined, so draws are
/// computed here directly from the mt19937_64 bit stream (whose sequence is
/// fixed by the standard). Golden tests depend on this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// True with probability p; p <= 0 never fires, p >= 1 always fires.
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stp
