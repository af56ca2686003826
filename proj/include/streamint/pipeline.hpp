#pragma once

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <vector>

#include "streamint/operators.hpp"

namespace streamint {

enum class AggregateKind { Swa, Sliding };

struct AggregateConfig {
  AggregateKind kind = AggregateKind::Swa;
  int capacity = 13;
  int timeout_s = 22;
  std::size_t window = 32000;
  std::size_t step = 32000;
};

/// Fixed topology: N partition feeds -> UNION -> one AGGREGATE -> sink.
struct PipelineConfig {
  BoundedQueueSpec queue;
  /// Overrides the page-derived capacity (e.g. 60 instead of 70).
  std::optional<std::int64_t> queue_capacity;
  double union_service_ms = 0.005364;
  AggregateConfig aggregate;
  AssociationStrategy strategy = AssociationStrategy::HeadTimestampClient;
  bool keep_members = true;
  ReplayMode mode = ReplayMode::EventTime;

  std::int64_t effective_queue_capacity() const { return queue_capacity ? *queue_capacity : queue.capacity(); }
};

/// {"queue":{"pages":10,"page_size":1024,"tuple_size":135},
///  "aggregate":{"kind":"swa|sliding","capacity":13,"timeout_s":22,"window":32000,"step":32000},
///  "strategy":"head|head_ts|head_ip|head_ts_ip"}
/// plus optional "queue_capacity", "union_service_ms", "topology".
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& c);

struct PipelineResult {
  std::vector<EmittedInstance> emitted;
  OperatorStats union_stats;
  OperatorStats aggregate_stats;
};

PipelineResult run_pipeline(const Trace& trace, const PipelineConfig& cfg);

/// Table-style operator summary: average/peak queue length, storage, residence.
nlohmann::json summarize(const OperatorStats& s);

inline constexpr const char* kEmittedHeader = "key,k,close_reason,closed_at_ms,avg_response_ms,span_ms";
inline constexpr const char* kMembersHeader = "instance,members";

void write_emitted(const std::vector<EmittedInstance>& emitted, std::ostream& out);
/// Sidecar listing each instance's member row refs, ';'-separated.
void write_members(const std::vector<EmittedInstance>& emitted, std::ostream& out);
/// Reads the emitted CSV and, when given, the members sidecar.
std::vector<EmittedInstance> read_emitted(std::istream& in, std::istream* members = nullptr);

}  // namespace streamint
