#pragma once

#include <cstdint>

namespace streamint {

/// Tuples that fit in `pages` pages of `page_size` bytes: pages * floor(page_size / tuple_size).
/// Zero when a tuple does not fit in a page.
std::int64_t buffer_capacity(std::int64_t pages, std::int64_t page_size, std::int64_t tuple_size);

/// Smallest server count c with lambda / (c mu) < 1.
std::int64_t min_servers(double lambda, double mu);

/// Bytes held by `windows` windows of `capacity` tuples each.
std::int64_t storage_estimate(std::int64_t windows, std::int64_t capacity, std::int64_t tuple_size);

inline constexpr double kMebibyte = 1024.0 * 1024.0;
inline constexpr std::int64_t kTupleSizeBytes = 135;

struct BoundedQueueSpec {
  std::int64_t pages = 10;
  std::int64_t page_size = 1024;
  std::int64_t tuple_size = kTupleSizeBytes;

  std::int64_t capacity() const { return buffer_capacity(pages, page_size, tuple_size); }
};

}  // namespace streamint
