#include "streamint/simulation.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <vector>

#include "streamint/errors.hpp"
#include "streamint/rng.hpp"

namespace streamint {

namespace {

struct BatchAcc {
  double area_system = 0.0;
  double area_waiting = 0.0;
  double span = 0.0;
  double sojourn = 0.0;
  double wait = 0.0;
  std::uint64_t arrivals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t busy = 0;
  std::uint64_t lost = 0;
  std::uint64_t served = 0;  ///< accepted tuples whose sojourn is recorded
};

struct Waiting {
  double arrived;
  int batch;  ///< -1 during warm-up and after the measured run
};

struct Departure {
  double time;
  int size;
  bool operator>(const Departure& o) const { return time > o.time; }
};

PerfIndicators indicators(const BatchAcc& b) {
  PerfIndicators p;
  p.L = b.area_system / b.span;
  p.Lq = b.area_waiting / b.span;
  p.W = b.served ? b.sojourn / double(b.served) : 0.0;
  p.Wq = b.served ? b.wait / double(b.served) : 0.0;
  p.Pbusy = b.arrivals ? double(b.busy) / double(b.arrivals) : 0.0;
  p.Ploss = b.arrivals ? double(b.lost) / double(b.arrivals) : 0.0;
  p.lambda = double(b.arrivals) / b.span;
  return p;
}

}  // namespace

SimResult des_simulate(const SimModel& model, std::uint64_t arrivals, std::uint64_t seed) {
  if (arrivals < std::uint64_t(kSimBatches)) throw ConfigError("need at least 20 measured arrivals");
  if (model.batch_min < 1 || model.batch_max < model.batch_min) throw ConfigError("batch bounds need 1 <= a <= b");
  if (model.servers && *model.servers < 1) throw ConfigError("server count must be >= 1");
  if (model.capacity && *model.capacity < model.batch_max)
    throw ConfigError("system capacity must be at least the maximum batch size");

  Rng root(seed);
  Rng arr_rng = root.fork();
  Rng svc_rng = root.fork();
  const Sampler next_gap = make_sampler(model.arrival);
  const Sampler next_service = make_sampler(model.service);

  const std::uint64_t warmup = arrivals / 50;
  const std::uint64_t total = warmup + arrivals;
  const std::uint64_t per_batch = arrivals / kSimBatches;
  auto batch_of = [&](std::uint64_t n) -> int {
    if (n < warmup || n >= total) return -1;
    return int(std::min<std::uint64_t>((n - warmup) / per_batch, kSimBatches - 1));
  };

  std::vector<BatchAcc> acc(kSimBatches);
  std::deque<Waiting> waiting;
  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures;
  long busy_servers = 0;
  long in_service = 0;
  std::uint64_t pending = 0;  // measured tuples not yet in service

  double now = 0.0;
  double next_arrival = next_gap(arr_rng);
  std::uint64_t n = 0;
  int clock_batch = -1;  // batch whose time window the clock is in

  auto advance = [&](double t) {
    if (clock_batch >= 0) {
      const double dt = t - now;
      auto& b = acc[clock_batch];
      b.span += dt;
      b.area_system += dt * double(in_service + long(waiting.size()));
      b.area_waiting += dt * double(waiting.size());
    }
    now = t;
  };

  auto try_start = [&] {
    while ((!model.servers || busy_servers < *model.servers) && long(waiting.size()) >= model.batch_min) {
      const int size = int(std::min<std::size_t>(std::size_t(model.batch_max), waiting.size()));
      const double done = now + next_service(svc_rng);
      for (int i = 0; i < size; ++i) {
        const auto w = waiting.front();
        waiting.pop_front();
        if (w.batch >= 0) {
          auto& b = acc[w.batch];
          b.wait += now - w.arrived;
          b.sojourn += done - w.arrived;
          ++b.served;
          --pending;
        }
      }
      departures.push({done, size});
      ++busy_servers;
      in_service += size;
    }
  };

  while (n < total || pending > 0) {
    const double dep = departures.empty() ? std::numeric_limits<double>::infinity() : departures.top().time;
    if (dep <= next_arrival) {
      advance(dep);
      const auto d = departures.top();
      departures.pop();
      --busy_servers;
      in_service -= d.size;
      try_start();
      continue;
    }
    advance(next_arrival);
    const int batch = batch_of(n);
    clock_batch = batch;
    ++n;
    next_arrival = now + next_gap(arr_rng);
    const long present = in_service + long(waiting.size());
    const bool full = model.capacity && present >= *model.capacity;
    const bool all_busy = model.servers && busy_servers >= *model.servers;
    if (batch >= 0) {
      auto& b = acc[batch];
      ++b.arrivals;
      if (all_busy) ++b.busy;
      if (full) ++b.lost;
      else ++b.accepted;
    }
    if (full) continue;
    waiting.push_back({now, batch});
    if (batch >= 0) ++pending;
    try_start();
  }

  BatchAcc all;
  std::vector<PerfIndicators> per;
  for (const auto& b : acc) {
    all.area_system += b.area_system;
    all.area_waiting += b.area_waiting;
    all.span += b.span;
    all.sojourn += b.sojourn;
    all.wait += b.wait;
    all.arrivals += b.arrivals;
    all.accepted += b.accepted;
    all.busy += b.busy;
    all.lost += b.lost;
    all.served += b.served;
    per.push_back(indicators(b));
  }

  SimResult r;
  r.perf = indicators(all);
  r.arrivals = all.arrivals;
  r.lost = all.lost;
  r.batches = kSimBatches;

  const boost::math::students_t tdist(kSimBatches - 1);
  const double tq = boost::math::quantile(boost::math::complement(tdist, 0.025));
  auto half = [&](double PerfIndicators::*field) {
    double mean = 0.0;
    for (const auto& p : per) mean += p.*field;
    mean /= double(per.size());
    double ss = 0.0;
    for (const auto& p : per) ss += (p.*field - mean) * (p.*field - mean);
    return tq * std::sqrt(ss / double(per.size() - 1) / double(per.size()));
  };
  r.half_width.L = half(&PerfIndicators::L);
  r.half_width.Lq = half(&PerfIndicators::Lq);
  r.half_width.W = half(&PerfIndicators::W);
  r.half_width.Wq = half(&PerfIndicators::Wq);
  r.half_width.Pbusy = half(&PerfIndicators::Pbusy);
  r.half_width.Ploss = half(&PerfIndicators::Ploss);
  r.half_width.lambda = half(&PerfIndicators::lambda);
  return r;
}

nlohmann::json to_json(const SimResult& r) {
  auto j = to_json(r.perf);
  j["ci95_half_width"] = to_json(r.half_width);
  j["arrivals"] = r.arrivals;
  j["lost"] = r.lost;
  j["batches"] = r.batches;
  return j;
}

}  // namespace streamint
