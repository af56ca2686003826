#include "streamint/sizing.hpp"

#include <cmath>

#include "streamint/errors.hpp"

namespace streamint {

std::int64_t buffer_capacity(std::int64_t pages, std::int64_t page_size, std::int64_t tuple_size) {
  if (pages < 0 || page_size <= 0 || tuple_size <= 0) throw ConfigError("queue sizing values must be positive");
  return pages * (page_size / tuple_size);
}

std::int64_t min_servers(double lambda, double mu) {
  if (!(lambda > 0.0) || !(mu > 0.0)) throw ConfigError("arrival and service rates must be positive");
  return static_cast<std::int64_t>(std::floor(lambda / mu)) + 1;
}

std::int64_t storage_estimate(std::int64_t windows, std::int64_t capacity, std::int64_t tuple_size) {
  return windows * capacity * tuple_size;
}

}  // namespace streamint
