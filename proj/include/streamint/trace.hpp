#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "streamint/distributions.hpp"

namespace streamint {

/// One composite service: the head plus its atomic sub-services.
struct ServiceDef {
  std::string service_id;
  std::string head_id;
  int degree = 1;
  /// sub_services[0] is the head itself.
  std::vector<std::string> sub_services;
  std::vector<int> partition_of_subservice;
  /// Head id that invocations of each sub-service carry. Equals head_id
  /// unless the sub-service is an atomic shared with another head.
  std::vector<std::string> declared_head;
};

struct ServiceCatalog {
  std::vector<ServiceDef> services;
  int partitions = 2;
};

struct CatalogOptions {
  int partitions = 2;
  /// Re-use atomics of the previous service, so one atomic service appears
  /// under two heads and its invocations carry the other head's id.
  bool shared_atomics = false;
  double shared_fraction = 0.25;
};

/// Degrees are round(sample) clamped to >= 1. Sub-service j of a service is
/// placed on partition j mod partitions, so heads share partition 0.
ServiceCatalog build_catalog(std::size_t count, const Distribution& degree_dist, std::uint64_t seed,
                             const CatalogOptions& opts = {});

using InstanceId = std::uint64_t;

struct InvocationTuple {
  std::int64_t timestamp_ms = 0;
  std::string user_id;
  std::string service_id;
  std::string head_id;
  std::int64_t instance_ts_s = 0;
  std::int64_t response_ms = 0;
  InstanceId truth_instance = 0;
  int partition = 0;

  friend bool operator==(const InvocationTuple&, const InvocationTuple&) = default;
};

/// Rows in canonical order: timestamp, then partition, then generation order.
struct Trace {
  std::vector<InvocationTuple> rows;
  int partitions = 1;

  /// Row indices of one partition, in row order.
  std::vector<std::size_t> partition_rows(int partition) const;
};

enum class Placement { Uniform, EvenlySpaced };

struct TraceConfig {
  std::size_t instance_count = 1;
  Distribution arrival_dist = PointMass{1.0};
  Distribution span_dist = PointMass{0.0};
  std::size_t user_pool = 1;
  double repeat_factor = 1.0;
  std::uint64_t seed = 0;
  /// Milliseconds per unit of arrival_dist / span_dist.
  double arrival_unit_ms = 1.0;
  double span_unit_ms = 1000.0;
  Placement placement = Placement::Uniform;
};

Trace generate_trace(const ServiceCatalog& catalog, const TraceConfig& cfg);

/// Degrees of the reference workload: Erlang(8.7963, 100).
ErlangDist reference_degree_dist();
/// Instance response-time span in seconds: two-branch Hyper-Erlang.
HyperErlangDist reference_span_dist();
/// Primary-invocation inter-arrival (ms), raw coefficients; not a valid generator.
PhaseTypeDist reference_arrival_ph_raw();
/// All-invocation inter-arrival (ms) after merging both domains.
PhaseTypeDist reference_union_arrival_ph();
/// UNION service time (ms), raw coefficients; not a valid generator.
PhaseTypeDist reference_union_service_ph_raw();
/// Repaired primary inter-arrival rescaled to a 9.7780 ms mean.
PhaseTypeDist reference_arrival_ph();

/// Multiplies every duration by `factor` (divides the generator).
PhaseTypeDist scale_time(const PhaseTypeDist& d, double factor);

/// 13,997 instances over 10,000 pages, both domains, reference distributions.
struct ReferenceWorkload {
  ServiceCatalog catalog;
  TraceConfig config;
};
ReferenceWorkload reference_workload(std::uint64_t seed, std::size_t instances = 13997);

inline constexpr const char* kTraceHeader =
    "timestamp_ms,user_id,service_id,head_id,instance_ts_s,response_ms,truth_instance,partition";

void write_trace(const Trace& trace, std::ostream& out);
void write_trace(const Trace& trace, const std::filesystem::path& path);
Trace read_trace(std::istream& in);
Trace read_trace(const std::filesystem::path& path);

/// What operators see: truth and partition are stripped. `ref` is the row
/// index in the source trace and is only consulted in evaluation mode.
struct StreamTuple {
  std::int64_t timestamp_ms = 0;
  std::string user_id;
  std::string service_id;
  std::string head_id;
  std::int64_t instance_ts_s = 0;
  std::int64_t response_ms = 0;
  std::uint32_t ref = 0;
};

StreamTuple to_stream_tuple(const InvocationTuple& t, std::uint32_t ref);

enum class ReplayMode { AsFastAsPossible, EventTime };

/// One partition's tuples in timestamp order. Movable between threads; not
/// meant to be shared.
class Feed {
 public:
  Feed() = default;
  explicit Feed(std::vector<StreamTuple> tuples) : tuples_(std::move(tuples)) {}

  const StreamTuple* peek() const { return pos_ < tuples_.size() ? &tuples_[pos_] : nullptr; }
  std::optional<StreamTuple> next();
  std::size_t remaining() const { return tuples_.size() - pos_; }
  std::size_t size() const { return tuples_.size(); }

 private:
  std::vector<StreamTuple> tuples_;
  std::size_t pos_ = 0;
};

/// Splits a trace into per-partition feeds. In event-time mode the logical
/// clock follows delivered timestamps; as-fast-as-possible leaves it at zero
/// so only end-of-stream flushes close windows on time.
class Replay {
 public:
  Replay(const Trace& trace, ReplayMode mode);

  ReplayMode mode() const noexcept { return mode_; }
  std::size_t partitions() const noexcept { return feeds_.size(); }
  Feed& feed(std::size_t p) { return feeds_.at(p); }
  std::vector<Feed> take_feeds() { return std::move(feeds_); }

  /// Delivers the next tuple across all partitions in merged order
  /// (timestamp, then lower partition), advancing the clock in event-time mode.
  std::optional<StreamTuple> next_merged();
  double now_ms() const noexcept { return now_ms_; }

 private:
  ReplayMode mode_;
  std::vector<Feed> feeds_;
  double now_ms_ = 0.0;
};

}  // namespace streamint
