#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "streamint/keys.hpp"
#include "streamint/params.hpp"
#include "streamint/queues.hpp"
#include "streamint/sizing.hpp"
#include "streamint/trace.hpp"

namespace streamint {

enum class CloseReason { None, Full, Timeout };
std::string_view to_string(CloseReason r);

struct InstanceAggregates {
  std::size_t count = 0;
  std::int64_t min_response_ms = 0;
  std::int64_t max_response_ms = 0;
  double avg_response_ms = 0.0;
  /// Last member timestamp minus first.
  std::int64_t span_ms = 0;
};

/// One closed window's output tuple.
struct EmittedInstance {
  std::string key;
  std::size_t k = 0;
  /// Trace row refs of the members; filled only in evaluation mode.
  std::vector<std::uint32_t> members;
  InstanceAggregates aggregates;
  double opened_at_ms = 0.0;
  double closed_at_ms = 0.0;
  CloseReason close_reason = CloseReason::None;
};

/// Running mean/max over samples taken at tuple arrivals.
struct SampleSummary {
  std::uint64_t n = 0;
  double sum = 0.0;
  double max = 0.0;

  void add(double v) {
    ++n;
    sum += v;
    if (v > max) max = v;
  }
  double mean() const { return n ? sum / double(n) : 0.0; }
};

struct OperatorStats {
  std::string name;
  std::uint64_t tuples_in = 0;
  /// Tuples handed downstream (UNION) or folded into emitted instances (aggregates).
  std::uint64_t tuples_out = 0;
  std::uint64_t tuples_dropped = 0;
  std::uint64_t outputs = 0;
  /// Per output: tuple residence (UNION), window lifetime (SWA), or mean member wait (sliding).
  std::vector<double> residence_ms;
  /// Tuples resident, sampled at each arrival before it is admitted.
  SampleSummary resident_tuples;
  /// Open windows (SWA) or 1 while a batch is buffered (sliding), sampled at arrivals.
  SampleSummary resident_windows;
  SampleSummary storage_bytes;

  std::uint64_t still_resident = 0;
  double mean_residence_ms() const;
};

using EmitFn = std::function<void(EmittedInstance&&)>;

/// Merges the partition streams through one bounded input queue served by a
/// single FCFS server with a fixed per-tuple service time. Arrivals that find
/// the queue full are dropped.
class UnionOperator {
 public:
  using ForwardFn = std::function<void(const StreamTuple&, double departure_ms)>;

  UnionOperator(std::size_t queue_capacity, double service_ms);

  /// Completes every service that finishes at or before `now`.
  void advance(double now, const ForwardFn& forward);
  /// Returns false when the tuple was dropped.
  bool offer(const StreamTuple& t, double now, const ForwardFn& forward);
  void drain(const ForwardFn& forward);

  /// A stalled consumer takes nothing from the queue.
  void set_stalled(bool stalled) { stalled_ = stalled; }
  std::size_t queued() const { return queue_.size(); }
  OperatorStats stats() const;

 private:
  struct Pending {
    StreamTuple tuple;
    double arrival_ms;
  };
  void start_next(double now);

  BoundedQueue<Pending> queue_;
  double service_ms_;
  bool stalled_ = false;
  bool busy_ = false;
  Pending in_service_{};
  double busy_until_ = 0.0;
  double last_now_ = 0.0;
  OperatorStats stats_;
};

/// Count-based window of `window` tuples advancing by `step`; each firing
/// groups its tuples by key and emits one instance per group.
class SlidingAggregate {
 public:
  SlidingAggregate(std::size_t window, std::size_t step, AssociationStrategy strategy, bool keep_members,
                   std::int64_t tuple_size = kTupleSizeBytes);

  void on_tuple(const StreamTuple& t, double now, const EmitFn& emit);
  /// Emits the tuples of the unfinished window with reason=timeout.
  void flush(const EmitFn& emit);
  OperatorStats stats() const;

 private:
  struct Buffered {
    StreamTuple tuple;
    double arrival_ms;
    std::uint64_t index;
  };
  void fire(std::uint64_t end_index, double now, CloseReason reason, const EmitFn& emit);

  std::size_t window_;
  std::size_t step_;
  AssociationStrategy strategy_;
  bool keep_members_;
  std::int64_t tuple_size_;
  std::deque<Buffered> buffer_;
  std::uint64_t arrivals_ = 0;
  std::uint64_t next_start_ = 0;
  double last_now_ = 0.0;
  OperatorStats stats_;
};

/// Small window array: at most one open window per key, closed when it
/// holds `capacity` tuples or has been open longer than `timeout_s`.
/// Timeouts are checked on every arrival and on a 100 ms event-time grid.
class SwaAggregate {
 public:
  static constexpr double kSweepIntervalMs = 100.0;

  SwaAggregate(const WindowParams& params, AssociationStrategy strategy, bool keep_members,
               std::int64_t tuple_size = kTupleSizeBytes);

  /// Runs every timeout sweep due at or before `now`.
  void advance(double now, const EmitFn& emit);
  void on_tuple(const StreamTuple& t, double now, const EmitFn& emit);
  /// Lets event time run out: every open window closes at its timeout.
  void flush(const EmitFn& emit);

  std::size_t open_windows() const { return windows_.size(); }
  OperatorStats stats() const;

 private:
  struct Window {
    std::uint64_t id;
    double opened_at_ms;
    std::vector<StreamTuple> tuples;
  };
  struct Expiry {
    double opened_at_ms;
    std::uint64_t id;
    std::string key;
  };
  double grid_expiry(double opened_at) const;
  void close(const std::string& key, double now, CloseReason reason, const EmitFn& emit);

  WindowParams params_;
  double timeout_ms_;
  AssociationStrategy strategy_;
  bool keep_members_;
  std::int64_t tuple_size_;
  std::unordered_map<std::string, Window> windows_;
  std::deque<Expiry> expiries_;
  std::uint64_t next_id_ = 0;
  std::uint64_t resident_tuples_ = 0;
  OperatorStats stats_;
};

}  // namespace streamint
