#include <cmath>
#include <string>

#include "streamint/errors.hpp"
#include "streamint/queueing.hpp"
#include "streamint/sizing.hpp"

namespace streamint {

double erlang_c(long servers, double offered_load) {
  if (servers < 1) throw DomainError("server count must be >= 1");
  if (!(offered_load >= 0.0)) throw DomainError("offered load must be >= 0");
  if (offered_load >= double(servers)) return 1.0;
  double b = 1.0;  // Erlang B recursion
  for (long c = 1; c <= servers; ++c) b = offered_load * b / (double(c) + offered_load * b);
  const double c = double(servers);
  return c * b / (c - offered_load * (1.0 - b));
}

PerfIndicators solve_ggc_approx(double lambda, double ca2, double service_mean, double cs2,
                                std::optional<long> servers) {
  if (!(lambda > 0.0) || !(service_mean > 0.0)) throw DomainError("rate and service mean must be > 0");
  if (ca2 < 0.0 || cs2 < 0.0) throw DomainError("squared coefficients of variation must be >= 0");
  PerfIndicators p;
  p.lambda = lambda;
  const double load = lambda * service_mean;
  if (!servers) {
    p.L = load;
    p.W = service_mean;
    return p;
  }
  const long c = *servers;
  if (c < 1) throw DomainError("server count must be >= 1");
  if (load >= double(c)) {
    const auto need = min_servers(lambda, 1.0 / service_mean);
    throw InstabilityError("utilization " + std::to_string(load / double(c)) + " >= 1 with " +
                               std::to_string(c) + " servers; need at least " + std::to_string(need),
                           long(need));
  }
  const double wait_prob = erlang_c(c, load);
  p.Pbusy = wait_prob;
  p.Wq = wait_prob * service_mean / (double(c) - load) * (ca2 + cs2) / 2.0;
  p.W = p.Wq + service_mean;
  p.Lq = lambda * p.Wq;
  p.L = lambda * p.W;
  return p;
}

}  // namespace streamint
