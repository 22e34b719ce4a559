#pragma once

#include <cstdint>

namespace robreg {

/// Seedable, portable PRNG (xoshiro256++) with the distributions the
/// generators need. Every draw is built from raw 64-bit output, so two
/// builds with the same seed produce the same stream regardless of the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double uniform01();
  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (second value cached).
  double normal();
  /// +1 or -1 with equal probability.
  double rademacher();
  /// Laplace(0, scale).
  double laplace(double scale);
  /// Student t with integer df >= 1, unit scale (not unit variance).
  double student_t(int df);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Mixes (master, a, b) into an independent stream seed. Used by the
  /// sweep harness so (cell, seed) tasks agree between serial and
  /// parallel runs.
  static std::uint64_t derive_stream(std::uint64_t master, std::uint64_t a,
                                     std::uint64_t b);

 private:
  std::uint64_t state_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace robreg
