#include "streamint/pipeline.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "streamint/errors.hpp"

namespace streamint {

using nlohmann::json;

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  try {
    if (j.contains("topology") && j.at("topology").get<std::string>() != "union->aggregate")
      throw ConfigError("unsupported topology '" + j.at("topology").get<std::string>() + "'");
    if (j.contains("queue")) {
      const auto& q = j.at("queue");
      c.queue.pages = q.value("pages", c.queue.pages);
      c.queue.page_size = q.value("page_size", c.queue.page_size);
      c.queue.tuple_size = q.value("tuple_size", c.queue.tuple_size);
    }
    if (j.contains("queue_capacity")) c.queue_capacity = j.at("queue_capacity").get<std::int64_t>();
    c.union_service_ms = j.value("union_service_ms", c.union_service_ms);
    if (j.contains("aggregate")) {
      const auto& a = j.at("aggregate");
      const auto kind = a.value("kind", std::string("swa"));
      if (kind == "swa") c.aggregate.kind = AggregateKind::Swa;
      else if (kind == "sliding") c.aggregate.kind = AggregateKind::Sliding;
      else throw ConfigError("unknown aggregate kind '" + kind + "'");
      c.aggregate.capacity = a.value("capacity", c.aggregate.capacity);
      c.aggregate.timeout_s = a.value("timeout_s", c.aggregate.timeout_s);
      c.aggregate.window = a.value("window", c.aggregate.window);
      c.aggregate.step = a.value("step", c.aggregate.step);
    }
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("mode")) {
      const auto mode = j.at("mode").get<std::string>();
      if (mode == "event-time") c.mode = ReplayMode::EventTime;
      else if (mode == "as-fast-as-possible") c.mode = ReplayMode::AsFastAsPossible;
      else throw ConfigError("unknown replay mode '" + mode + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed pipeline config: ") + e.what());
  }
  return c;
}

json to_json(const PipelineConfig& c) {
  json j;
  j["topology"] = "union->aggregate";
  j["queue"] = {{"pages", c.queue.pages}, {"page_size", c.queue.page_size}, {"tuple_size", c.queue.tuple_size}};
  if (c.queue_capacity) j["queue_capacity"] = *c.queue_capacity;
  j["union_service_ms"] = c.union_service_ms;
  j["aggregate"] = {{"kind", c.aggregate.kind == AggregateKind::Swa ? "swa" : "sliding"},
                    {"capacity", c.aggregate.capacity},
                    {"timeout_s", c.aggregate.timeout_s},
                    {"window", c.aggregate.window},
                    {"step", c.aggregate.step}};
  j["strategy"] = std::string(to_string(c.strategy));
  j["mode"] = c.mode == ReplayMode::EventTime ? "event-time" : "as-fast-as-possible";
  return j;
}

PipelineResult run_pipeline(const Trace& trace, const PipelineConfig& cfg) {
  const auto capacity = cfg.effective_queue_capacity();
  if (capacity < 1) throw ConfigError("UNION queue capacity must be positive (tuple larger than a page?)");

  const bool event_time = cfg.mode == ReplayMode::EventTime;
  Replay replay(trace, cfg.mode);
  UnionOperator union_op(static_cast<std::size_t>(capacity), event_time ? cfg.union_service_ms : 0.0);

  PipelineResult result;
  EmitFn sink = [&result](EmittedInstance&& e) { result.emitted.push_back(std::move(e)); };

  auto run_with = [&](auto& aggregate) {
    const UnionOperator::ForwardFn forward = [&](const StreamTuple& t, double departure) {
      if constexpr (requires { aggregate.advance(departure, sink); }) aggregate.advance(departure, sink);
      aggregate.on_tuple(t, departure, sink);
    };
    while (auto t = replay.next_merged()) union_op.offer(*t, replay.now_ms(), forward);
    union_op.drain(forward);
    aggregate.flush(sink);
    result.aggregate_stats = aggregate.stats();
  };

  if (cfg.aggregate.kind == AggregateKind::Swa) {
    WindowParams p;
    p.capacity = cfg.aggregate.capacity;
    p.timeout_s = cfg.aggregate.timeout_s;
    SwaAggregate agg(p, cfg.strategy, cfg.keep_members, cfg.queue.tuple_size);
    run_with(agg);
  } else {
    SlidingAggregate agg(cfg.aggregate.window, cfg.aggregate.step, cfg.strategy, cfg.keep_members,
                         cfg.queue.tuple_size);
    run_with(agg);
  }
  result.union_stats = union_op.stats();
  return result;
}

json summarize(const OperatorStats& s) {
  return {{"name", s.name},
          {"tuples_in", s.tuples_in},
          {"tuples_out", s.tuples_out},
          {"tuples_dropped", s.tuples_dropped},
          {"outputs", s.outputs},
          {"avg_queue_tuples", s.resident_tuples.mean()},
          {"max_queue_tuples", s.resident_tuples.max},
          {"avg_windows", s.resident_windows.mean()},
          {"max_windows", s.resident_windows.max},
          {"avg_storage_bytes", s.storage_bytes.mean()},
          {"max_storage_bytes", s.storage_bytes.max},
          {"avg_storage_mb", s.storage_bytes.mean() / kMebibyte},
          {"max_storage_mb", s.storage_bytes.max / kMebibyte},
          {"avg_residence_ms", s.mean_residence_ms()}};
}

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError("bad number '" + s + "'", row);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad number '" + s + "'", row);
  }
}

}  // namespace

void write_emitted(const std::vector<EmittedInstance>& emitted, std::ostream& out) {
  out << kEmittedHeader << '\n';
  for (const auto& e : emitted)
    out << e.key << ',' << e.k << ',' << to_string(e.close_reason) << ',' << fixed3(e.closed_at_ms) << ','
        << fixed3(e.aggregates.avg_response_ms) << ',' << e.aggregates.span_ms << '\n';
}

void write_members(const std::vector<EmittedInstance>& emitted, std::ostream& out) {
  out << kMembersHeader << '\n';
  for (std::size_t i = 0; i < emitted.size(); ++i) {
    out << i << ',';
    const auto& m = emitted[i].members;
    for (std::size_t j = 0; j < m.size(); ++j) out << (j ? ";" : "") << m[j];
    out << '\n';
  }
}

std::vector<EmittedInstance> read_emitted(std::istream& in, std::istream* members) {
  std::string line;
  if (!std::getline(in, line) || line != kEmittedHeader) throw ParseError("unexpected emitted header", 0);
  std::vector<EmittedInstance> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto f = split_csv(line);
    if (f.size() != 6) throw ParseError("expected 6 columns", row);
    EmittedInstance e;
    e.key = f[0];
    e.k = static_cast<std::size_t>(parse_double(f[1], row));
    if (f[2] == "full") e.close_reason = CloseReason::Full;
    else if (f[2] == "timeout") e.close_reason = CloseReason::Timeout;
    else throw ParseError("bad close_reason '" + f[2] + "'", row);
    e.closed_at_ms = parse_double(f[3], row);
    e.aggregates.count = e.k;
    e.aggregates.avg_response_ms = parse_double(f[4], row);
    e.aggregates.span_ms = static_cast<std::int64_t>(parse_double(f[5], row));
    out.push_back(std::move(e));
  }
  if (members) {
    if (!std::getline(*members, line) || line != kMembersHeader) throw ParseError("unexpected members header", 0);
    row = 0;
    while (std::getline(*members, line)) {
      ++row;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ParseError("expected 2 columns", row);
      const auto idx = static_cast<std::size_t>(parse_double(line.substr(0, comma), row));
      if (idx >= out.size()) throw ParseError("instance index out of range", row);
      std::stringstream ss(line.substr(comma + 1));
      std::string ref;
      while (std::getline(ss, ref, ';')) {
        std::uint32_t v = 0;
        const auto [p, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), v);
        if (ec != std::errc() || p != ref.data() + ref.size()) throw ParseError("bad member ref '" + ref + "'", row);
        out[idx].members.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace streamint
