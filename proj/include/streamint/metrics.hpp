#pragma once

#include <json.hpp>
#include <optional>
#include <unordered_map>
#include <vector>

#include "streamint/operators.hpp"
#include "streamint/trace.hpp"

namespace streamint {

/// Ground truth recovered from a trace: the instance of every row, and the
/// degree N and primary arrival of every instance.
class GroundTruth {
 public:
  explicit GroundTruth(const Trace& trace);

  std::size_t instance_count() const { return degree_.size(); }
  std::size_t tuple_count() const { return row_instance_.size(); }
  /// Dense instance index of a trace row.
  std::size_t instance_of(std::uint32_t row) const;
  std::size_t degree(std::size_t instance) const { return degree_[instance]; }
  std::int64_t primary_arrival(std::size_t instance) const { return arrival_[instance]; }
  InstanceId label(std::size_t instance) const { return labels_[instance]; }

 private:
  std::vector<std::size_t> row_instance_;
  std::vector<std::size_t> degree_;
  std::vector<std::int64_t> arrival_;
  std::vector<InstanceId> labels_;
};

/// Dense instance index each emission maps to: the label held by most of its
/// members, ties going to the instance whose primary invocation came first.
/// Emissions without members map to nullopt.
std::vector<std::optional<std::size_t>> match_instances(const std::vector<EmittedInstance>& emitted,
                                                        const GroundTruth& truth);

/// Fraction of truth instances whose best mapped window holds K of their N
/// tuples with K / N >= gamma. K counts only the instance's own tuples.
double completeness(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth, double gamma);

/// Fraction of invocation tuples that are members of some emission.
double capture_rate(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth);

/// Fraction of truth instances with at least one tuple in some emission.
double partial_instance_ratio(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth);

struct RecallCorrect {
  double recall;
  double correct_rate;
};
RecallCorrect recall_and_correct_rate(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth);

struct EvaluationReport {
  std::vector<std::pair<double, double>> completeness;  // (gamma, ratio)
  double capture_rate = 0.0;
  double partial_instance_ratio = 0.0;
  double recall = 0.0;
  double correct_rate = 0.0;
  std::size_t truth_instances = 0;
  std::size_t truth_tuples = 0;
  std::size_t emitted_instances = 0;
  std::size_t captured_tuples = 0;
  std::size_t recalled_instances = 0;
  std::size_t correct_instances = 0;
};

EvaluationReport evaluate(const std::vector<EmittedInstance>& emitted, const GroundTruth& truth,
                          const std::vector<double>& gammas = {1.0, 0.85, 0.75});

nlohmann::json to_json(const EvaluationReport& r);

}  // namespace streamint
