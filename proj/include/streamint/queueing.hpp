#pragma once

#include <json.hpp>
#include <optional>

#include "streamint/distributions.hpp"
#include "streamint/sizing.hpp"

namespace streamint {

/// Steady-state behaviour of one queue. Times are in the units of the inputs.
struct PerfIndicators {
  double L = 0.0;      ///< mean number in system
  double Lq = 0.0;     ///< mean number waiting
  double W = 0.0;      ///< mean residence time of an accepted tuple
  double Wq = 0.0;     ///< mean wait before service
  double Pbusy = 0.0;  ///< probability an arrival finds the server(s) occupied
  double Ploss = 0.0;  ///< probability an arrival is rejected
  double lambda = 0.0; ///< offered arrival rate

  double accepted_rate() const { return lambda * (1.0 - Ploss); }
};

nlohmann::json to_json(const PerfIndicators& p);

/// PH arrivals, PH service, one server, system capacity N (waiting plus in
/// service). Batch bounds (a, b): service starts once a tuples wait and takes
/// up to b of them; a = b = 1 is ordinary single service.
struct PhQueueModel {
  PhaseTypeDist arrival;
  PhaseTypeDist service;
  int capacity = 60;
  int batch_min = 1;
  int batch_max = 1;
};

struct CtmcSolution {
  PerfIndicators perf;
  std::size_t states = 0;
  double residual = 0.0;  ///< max |(pi Q)_s|
  double pi_sum = 0.0;
  double min_pi = 0.0;
};

inline constexpr std::size_t kMaxCtmcStates = 100000;

/// Exact CTMC over (level, arrival phase, service phase), solved directly.
/// Loss and busy probabilities are taken at arrival instants: states are
/// weighted by the arrival-completion rate of their arrival phase.
CtmcSolution solve_ph_ph_1_n(const PhQueueModel& model, std::size_t max_states = kMaxCtmcStates);

/// Batch-service variant over (waiting count, arrival phase, idle | batch size
/// and service phase). With a = b = 1 it is the same chain as
/// solve_ph_ph_1_n, built independently.
CtmcSolution solve_batch_ph_ph_1_n(const PhQueueModel& model, std::size_t max_states = kMaxCtmcStates);

/// Erlang C: probability an arrival waits in M/M/c with offered load A = lambda / mu.
double erlang_c(long servers, double offered_load);

/// G/G/c by Allen-Cunneen: Wq = Wq(M/M/c) (ca2 + cs2) / 2. `servers` empty
/// means ample servers (no waiting, L = lambda * service_mean).
PerfIndicators solve_ggc_approx(double lambda, double ca2, double service_mean, double cs2,
                                std::optional<long> servers);

}  // namespace streamint
