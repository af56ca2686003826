#pragma once

#include <cstdint>
#include <optional>

#include "streamint/distributions.hpp"
#include "streamint/queueing.hpp"

namespace streamint {

/// Queue for the event-driven oracle. Empty `servers` means ample servers,
/// empty `capacity` an unbounded system. Capacity counts waiting plus in
/// service, as in the CTMC solvers.
struct SimModel {
  Distribution arrival = exponential(1.0);
  Distribution service = exponential(1.0);
  std::optional<long> servers = 1;
  std::optional<long> capacity;
  int batch_min = 1;
  int batch_max = 1;
};

struct SimResult {
  PerfIndicators perf;
  PerfIndicators half_width;  ///< 95% confidence half-widths from batch means
  std::uint64_t arrivals = 0; ///< measured arrivals, after warm-up
  std::uint64_t lost = 0;
  int batches = 0;
};

inline constexpr int kSimBatches = 20;

/// Runs `arrivals` measured arrivals after a warm-up of arrivals / 50.
/// L and Lq are time averages; W and Wq are per accepted tuple.
SimResult des_simulate(const SimModel& model, std::uint64_t arrivals, std::uint64_t seed);

nlohmann::json to_json(const SimResult& r);

}  // namespace streamint
