#pragma once

#include <cstdint>
#include <random>

namespace streamint {

// Wraps mt19937_64, whose output sequence is fixed by the standard. All
// variates are derived here rather than through <random> distributions so
// traces are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double rate);

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent stream derived from this one; used to give subsystems their
  /// own sequence so that adding draws in one does not shift another.
  Rng fork();

 private:
  std::mt19937_64 engine_;
};

}  // namespace streamint
