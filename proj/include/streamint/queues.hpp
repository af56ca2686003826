#pragma once

#include <atomic>
#include <cstddef>
#include <new>
#include <optional>
#include <vector>

#include "streamint/errors.hpp"

namespace streamint {

/// Fixed-capacity FIFO that rejects the arriving element when full
/// (drop-newest). Not thread-safe; operators own theirs.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : slots_(capacity) {}

  std::size_t capacity() const noexcept { return slots_.size(); }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  bool full() const noexcept { return size_ == slots_.size(); }
  std::size_t dropped() const noexcept { return dropped_; }

  bool push(T v) {
    if (full()) {
      ++dropped_;
      return false;
    }
    slots_[(head_ + size_) % slots_.size()] = std::move(v);
    ++size_;
    return true;
  }

  std::optional<T> pop() {
    if (empty()) return std::nullopt;
    T v = std::move(*slots_[head_]);
    slots_[head_].reset();
    head_ = (head_ + 1) % slots_.size();
    --size_;
    return v;
  }

  const T& front() const { return *slots_[head_]; }

 private:
  std::vector<std::optional<T>> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::size_t dropped_ = 0;
};

/// Lock-free single-producer/single-consumer ring for connecting operators
/// that run on separate threads. try_push fails when full; the producer
/// decides whether that is a drop.
template <typename T>
class SpscRing {
 public:
  explicit SpscRing(std::size_t capacity) : slots_(capacity + 1) {
    if (capacity == 0) throw ConfigError("SpscRing capacity must be positive");
  }

  SpscRing(const SpscRing&) = delete;
  SpscRing& operator=(const SpscRing&) = delete;

  std::size_t capacity() const noexcept { return slots_.size() - 1; }

  bool try_push(T v) {
    const auto tail = tail_.load(std::memory_order_relaxed);
    const auto next = increment(tail);
    if (next == head_.load(std::memory_order_acquire)) return false;
    slots_[tail] = std::move(v);
    tail_.store(next, std::memory_order_release);
    return true;
  }

  std::optional<T> try_pop() {
    const auto head = head_.load(std::memory_order_relaxed);
    if (head == tail_.load(std::memory_order_acquire)) return std::nullopt;
    std::optional<T> v = std::move(slots_[head]);
    head_.store(increment(head), std::memory_order_release);
    return v;
  }

  bool empty() const noexcept {
    return head_.load(std::memory_order_acquire) == tail_.load(std::memory_order_acquire);
  }

 private:
  std::size_t increment(std::size_t i) const noexcept { return i + 1 == slots_.size() ? 0 : i + 1; }

  std::vector<T> slots_;
  alignas(64) std::atomic<std::size_t> head_{0};
  alignas(64) std::atomic<std::size_t> tail_{0};
};

}  // namespace streamint
