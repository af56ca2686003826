#include "streamint/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace streamint {

namespace {

constexpr double kForever = std::numeric_limits<double>::infinity();

EmittedInstance make_instance(std::string key, const std::vector<const StreamTuple*>& members, bool keep_members,
                              double opened_at, double closed_at, CloseReason reason) {
  EmittedInstance e;
  e.key = std::move(key);
  e.k = members.size();
  e.opened_at_ms = opened_at;
  e.closed_at_ms = closed_at;
  e.close_reason = reason;
  auto& a = e.aggregates;
  a.count = members.size();
  if (!members.empty()) {
    a.min_response_ms = std::numeric_limits<std::int64_t>::max();
    a.max_response_ms = std::numeric_limits<std::int64_t>::min();
    std::int64_t first = members.front()->timestamp_ms, last = first;
    double sum = 0.0;
    for (const auto* t : members) {
      a.min_response_ms = std::min(a.min_response_ms, t->response_ms);
      a.max_response_ms = std::max(a.max_response_ms, t->response_ms);
      sum += double(t->response_ms);
      first = std::min(first, t->timestamp_ms);
      last = std::max(last, t->timestamp_ms);
      if (keep_members) e.members.push_back(t->ref);
    }
    a.avg_response_ms = sum / double(members.size());
    a.span_ms = last - first;
  }
  return e;
}

}  // namespace

std::string_view to_string(CloseReason r) {
  switch (r) {
    case CloseReason::None: return "none";
    case CloseReason::Full: return "full";
    case CloseReason::Timeout: return "timeout";
  }
  return "?";
}

double OperatorStats::mean_residence_ms() const {
  if (residence_ms.empty()) return 0.0;
  double s = 0.0;
  for (double r : residence_ms) s += r;
  return s / double(residence_ms.size());
}

// --- UNION ---------------------------------------------------------------

UnionOperator::UnionOperator(std::size_t queue_capacity, double service_ms)
    : queue_(queue_capacity), service_ms_(service_ms) {
  if (queue_capacity == 0) throw ConfigError("UNION queue capacity must be positive");
  if (!(service_ms >= 0.0)) throw ConfigError("UNION service time must be non-negative");
  stats_.name = "union";
}

void UnionOperator::start_next(double now) {
  auto next = queue_.pop();
  in_service_ = std::move(*next);
  busy_ = true;
  busy_until_ = now + service_ms_;
}

void UnionOperator::advance(double now, const ForwardFn& forward) {
  if (!busy_ && !stalled_ && !queue_.empty()) start_next(now);
  while (busy_ && busy_until_ <= now) {
    const double done = busy_until_;
    forward(in_service_.tuple, done);
    stats_.residence_ms.push_back(done - in_service_.arrival_ms);
    ++stats_.tuples_out;
    ++stats_.outputs;
    busy_ = false;
    if (!stalled_ && !queue_.empty()) start_next(done);
  }
}

bool UnionOperator::offer(const StreamTuple& t, double now, const ForwardFn& forward) {
  last_now_ = std::max(last_now_, now);
  advance(now, forward);
  const double resident = double(queue_.size() + (busy_ ? 1 : 0));
  stats_.resident_tuples.add(resident);
  stats_.storage_bytes.add(resident * double(kTupleSizeBytes));
  ++stats_.tuples_in;
  if (!queue_.push(Pending{t, now})) {
    ++stats_.tuples_dropped;
    return false;
  }
  advance(now, forward);
  return true;
}

void UnionOperator::drain(const ForwardFn& forward) {
  stalled_ = false;
  advance(last_now_, forward);  // a stalled queue resumes at the last arrival, not at infinity
  advance(kForever, forward);
}

OperatorStats UnionOperator::stats() const {
  OperatorStats s = stats_;
  s.still_resident = queue_.size() + (busy_ ? 1 : 0);
  return s;
}

// --- sliding-window AGGREGATE -------------------------------------------

SlidingAggregate::SlidingAggregate(std::size_t window, std::size_t step, AssociationStrategy strategy,
                                   bool keep_members, std::int64_t tuple_size)
    : window_(window), step_(step), strategy_(strategy), keep_members_(keep_members), tuple_size_(tuple_size) {
  if (window == 0 || step == 0) throw ConfigError("sliding window size and step must be >= 1");
  stats_.name = "aggregate(sliding)";
}

void SlidingAggregate::on_tuple(const StreamTuple& t, double now, const EmitFn& emit) {
  last_now_ = now;
  const double resident = double(buffer_.size());
  stats_.resident_tuples.add(resident);
  stats_.resident_windows.add(buffer_.empty() ? 0.0 : 1.0);
  stats_.storage_bytes.add(resident * double(tuple_size_));
  ++stats_.tuples_in;

  const std::uint64_t idx = arrivals_++;
  if (idx < next_start_) {
    // falls in the gap between windows when step > window
    ++stats_.tuples_dropped;
    return;
  }
  buffer_.push_back({t, now, idx});
  if (idx + 1 == next_start_ + window_) {
    fire(idx + 1, now, CloseReason::Full, emit);
    next_start_ += step_;
    while (!buffer_.empty() && buffer_.front().index < next_start_) buffer_.pop_front();
  }
}

void SlidingAggregate::fire(std::uint64_t end_index, double now, CloseReason reason, const EmitFn& emit) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const Buffered*>> groups;
  for (const auto& b : buffer_) {
    if (b.index < next_start_ || b.index >= end_index) continue;
    auto key = extract_key(b.tuple, strategy_).text;
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&b);
  }
  for (auto& key : order) {
    const auto& g = groups[key];
    std::vector<const StreamTuple*> members;
    double wait = 0.0;
    for (const auto* b : g) {
      members.push_back(&b->tuple);
      wait += now - b->arrival_ms;
    }
    stats_.residence_ms.push_back(wait / double(g.size()));
    stats_.tuples_out += g.size();
    ++stats_.outputs;
    emit(make_instance(std::move(key), members, keep_members_, g.front()->arrival_ms, now, reason));
  }
}

void SlidingAggregate::flush(const EmitFn& emit) {
  if (arrivals_ > next_start_) fire(arrivals_, last_now_, CloseReason::Timeout, emit);
  next_start_ = std::max<std::uint64_t>(next_start_, arrivals_);
  buffer_.clear();
}

OperatorStats SlidingAggregate::stats() const {
  OperatorStats s = stats_;
  s.still_resident = 0;
  for (const auto& b : buffer_)
    if (b.index >= next_start_) ++s.still_resident;
  return s;
}

// --- small window array AGGREGATE ---------------------------------------

SwaAggregate::SwaAggregate(const WindowParams& params, AssociationStrategy strategy, bool keep_members,
                           std::int64_t tuple_size)
    : params_(params),
      timeout_ms_(params.timeout_s * 1000.0),
      strategy_(strategy),
      keep_members_(keep_members),
      tuple_size_(tuple_size) {
  if (params.capacity < 1) throw ConfigError("window capacity must be >= 1");
  if (params.timeout_s < 1) throw ConfigError("window timeout must be >= 1 s");
  stats_.name = "aggregate(swa)";
}

double SwaAggregate::grid_expiry(double opened_at) const {
  return (std::floor((opened_at + timeout_ms_) / kSweepIntervalMs) + 1.0) * kSweepIntervalMs;
}

void SwaAggregate::close(const std::string& key, double now, CloseReason reason, const EmitFn& emit) {
  auto it = windows_.find(key);
  Window w = std::move(it->second);
  windows_.erase(it);
  std::vector<const StreamTuple*> members;
  members.reserve(w.tuples.size());
  for (const auto& t : w.tuples) members.push_back(&t);
  resident_tuples_ -= w.tuples.size();
  stats_.tuples_out += w.tuples.size();
  ++stats_.outputs;
  stats_.residence_ms.push_back(now - w.opened_at_ms);
  emit(make_instance(key, members, keep_members_, w.opened_at_ms, now, reason));
}

void SwaAggregate::advance(double now, const EmitFn& emit) {
  while (!expiries_.empty()) {
    const auto& e = expiries_.front();
    auto it = windows_.find(e.key);
    if (it == windows_.end() || it->second.id != e.id) {
      expiries_.pop_front();
      continue;
    }
    const double due = grid_expiry(e.opened_at_ms);
    if (due > now) break;
    const std::string key = e.key;
    expiries_.pop_front();
    close(key, due, CloseReason::Timeout, emit);
  }
}

void SwaAggregate::on_tuple(const StreamTuple& t, double now, const EmitFn& emit) {
  advance(now, emit);
  // arrival-driven sweep
  while (!expiries_.empty()) {
    const auto& e = expiries_.front();
    auto it = windows_.find(e.key);
    if (it == windows_.end() || it->second.id != e.id) {
      expiries_.pop_front();
      continue;
    }
    if (!(now - e.opened_at_ms > timeout_ms_)) break;
    const std::string key = e.key;
    expiries_.pop_front();
    close(key, now, CloseReason::Timeout, emit);
  }

  stats_.resident_tuples.add(double(resident_tuples_));
  stats_.resident_windows.add(double(windows_.size()));
  stats_.storage_bytes.add(double(windows_.size()) * params_.capacity * double(tuple_size_));
  ++stats_.tuples_in;

  auto key = extract_key(t, strategy_).text;
  auto it = windows_.find(key);
  if (it == windows_.end()) {
    const std::uint64_t id = next_id_++;
    it = windows_.emplace(key, Window{id, now, {}}).first;
    it->second.tuples.reserve(params_.capacity);
    expiries_.push_back({now, id, key});
  }
  it->second.tuples.push_back(t);
  ++resident_tuples_;
  if (static_cast<int>(it->second.tuples.size()) >= params_.capacity) close(key, now, CloseReason::Full, emit);
}

void SwaAggregate::flush(const EmitFn& emit) { advance(kForever, emit); }

OperatorStats SwaAggregate::stats() const {
  OperatorStats s = stats_;
  s.still_resident = resident_tuples_;
  return s;
}

}  // namespace streamint
