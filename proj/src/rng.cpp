#include "streamint/rng.hpp"

#include <cmath>

namespace streamint {

double Rng::exponential(double rate) { return -std::log(uniform_pos()) / rate; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  // reject the short tail so the draw is unbiased
  const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Rng Rng::fork() {
  // splitmix64 finalizer over a fresh draw
  std::uint64_t z = engine_() + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return Rng(z ^ (z >> 31));
}

}  // namespace streamint
