#include "streamint/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "streamint/errors.hpp"

namespace streamint {

GroundTruth::GroundTruth(const Trace& trace) {
  std::unordered_map<InstanceId, std::size_t> dense;
  row_instance_.reserve(trace.rows.size());
  for (const auto& r : trace.rows) {
    auto [it, inserted] = dense.try_emplace(r.truth_instance, labels_.size());
    if (inserted) {
      labels_.push_back(r.truth_instance);
      degree_.push_back(0);
      arrival_.push_back(r.timestamp_ms);
    }
    const std::size_t i = it->second;
    ++degree_[i];
    arrival_[i] = std::min(arrival_[i], r.timestamp_ms);
    row_instance_.push_back(i);
  }
}

std::size_t GroundTruth::instance_of(std::uint32_t row) const {
  if (row >= row_instance_.size()) throw InvalidInput("member ref " + std::to_string(row) + " is not a trace row");
  return row_instance_[row];
}

namespace {

struct Tally {
  std::size_t instance;
  std::size_t count;
};

// Member counts per instance, in order of first appearance.
std::vector<Tally> tally(const EmittedInstance& e, const GroundTruth& truth) {
  std::vector<Tally> out;
  for (auto ref : e.members) {
    const auto inst = truth.instance_of(ref);
    auto it = std::find_if(out.begin(), out.end(), [inst](const Tally& t) { return t.instance == inst; });
    if (it == out.end()) out.push_back({inst, 1});
    else ++it->count;
  }
  return out;
}

std::optional<Tally> majority(const std::vector<Tally>& t, const GroundTruth& truth) {
  if (t.empty()) return std::nullopt;
  auto better = [&truth](const Tally& a, const Tally& b) {
    if (a.count != b.count) return a.count > b.count;
    const auto aa = truth.primary_arrival(a.instance), ba = truth.primary_arrival(b.instance);
    if (aa != ba) return aa < ba;
    return truth.label(a.instance) < truth.label(b.instance);
  };
  return *std::min_element(t.begin(), t.end(), better);
}

void require_members(const std::vector<EmittedInstance>& emitted) {
  for (const auto& e : emitted)
    if (e.k > 0 && e.members.empty())
      throw ConfigError("evaluation needs member refs; run the pipeline in evaluation mode");
}

// Best own-member count K per truth instance among emissions mapped to it.
std::vector<std::size_t> best_k(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth) {
  std::vector<std::size_t> best(truth.instance_count(), 0);
  for (const auto& e : emitted) {
    const auto m = majority(tally(e, truth), truth);
    if (m) best[m->instance] = std::max(best[m->instance], m->count);
  }
  return best;
}

}  // namespace

std::vector<std::optional<std::size_t>> match_instances(const std::vector<EmittedInstance>& emitted,
                                                        const GroundTruth& truth) {
  std::vector<std::optional<std::size_t>> out;
  out.reserve(emitted.size());
  for (const auto& e : emitted) {
    const auto m = majority(tally(e, truth), truth);
    out.push_back(m ? std::optional<std::size_t>(m->instance) : std::nullopt);
  }
  return out;
}

double completeness(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0,1]");
  require_members(emitted);
  if (truth.instance_count() == 0) return 0.0;
  const auto best = best_k(emitted, truth);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < best.size(); ++i)
    if (double(best[i]) >= gamma * double(truth.degree(i)) - 1e-12) ++hit;
  return double(hit) / double(truth.instance_count());
}

namespace {

std::size_t captured_count(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth) {
  std::vector<bool> seen(truth.tuple_count(), false);
  std::size_t n = 0;
  for (const auto& e : emitted)
    for (auto ref : e.members) {
      truth.instance_of(ref);
      if (!seen[ref]) {
        seen[ref] = true;
        ++n;
      }
    }
  return n;
}

struct RecallCorrectCounts {
  std::size_t recalled = 0;
  std::size_t correct = 0;
};

RecallCorrectCounts recall_correct_counts(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth) {
  std::vector<bool> recalled(truth.instance_count(), false);
  RecallCorrectCounts c;
  for (const auto& e : emitted) {
    const auto t = tally(e, truth);
    const auto m = majority(t, truth);
    if (m) recalled[m->instance] = true;
    if (t.size() <= 1) ++c.correct;
  }
  c.recalled = static_cast<std::size_t>(std::count(recalled.begin(), recalled.end(), true));
  return c;
}

}  // namespace

double capture_rate(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth) {
  require_members(emitted);
  if (truth.tuple_count() == 0) return 0.0;
  return double(captured_count(emitted, truth)) / double(truth.tuple_count());
}

double partial_instance_ratio(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth) {
  require_members(emitted);
  if (truth.instance_count() == 0) return 0.0;
  std::vector<bool> seen(truth.instance_count(), false);
  for (const auto& e : emitted)
    for (auto ref : e.members) seen[truth.instance_of(ref)] = true;
  return double(std::count(seen.begin(), seen.end(), true)) / double(truth.instance_count());
}

RecallCorrect recall_and_correct_rate(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth) {
  require_members(emitted);
  const auto c = recall_correct_counts(emitted, truth);
  const double recall = truth.instance_count() ? double(c.recalled) / double(truth.instance_count()) : 0.0;
  const double correct_rate = emitted.empty() ? 0.0 : double(c.correct) / double(emitted.size());
  return {recall, correct_rate};
}

EvaluationReport evaluate(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth,
                          const std::vector<double>& gammas) {
  EvaluationReport r;
  for (double g : gammas) r.completeness.emplace_back(g, completeness(emitted, truth, g));
  r.capture_rate = capture_rate(emitted, truth);
  r.partial_instance_ratio = partial_instance_ratio(emitted, truth);
  const auto rc = recall_and_correct_rate(emitted, truth);
  r.recall = rc.recall;
  r.correct_rate = rc.correct_rate;
  r.truth_instances = truth.instance_count();
  r.truth_tuples = truth.tuple_count();
  r.emitted_instances = emitted.size();
  r.captured_tuples = captured_count(emitted, truth);
  const auto c = recall_correct_counts(emitted, truth);
  r.recalled_instances = c.recalled;
  r.correct_instances = c.correct;
  return r;
}

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [g, v] : r.completeness) {
    char name[64];
    std::snprintf(name, sizeof name, "Integration Completeness(gamma=%g)", g);
    rows[name] = v;
  }
  rows["Integration Completeness(0<gamma<=1) [invocation ratio]"] = r.capture_rate;
  rows["Integration Completeness(0<gamma<=1) [instance ratio]"] = r.partial_instance_ratio;
  rows["Recall"] = r.recall;
  rows["Correct rate"] = r.correct_rate;
  return {{"rows", rows},
          {"counts",
           {{"truth_instances", r.truth_instances},
            {"truth_tuples", r.truth_tuples},
            {"emitted_instances", r.emitted_instances},
            {"captured_tuples", r.captured_tuples},
            {"recalled_instances", r.recalled_instances},
            {"correct_instances", r.correct_instances}}}};
}

}  // namespace streamint
