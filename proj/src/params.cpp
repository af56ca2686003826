#include "streamint/params.hpp"

#include "streamint/errors.hpp"

namespace streamint {

namespace {

int smallest_covering(const Distribution& d, double target, int limit, const char* what) {
  for (int x = 1; x <= limit; ++x)
    if (d.cdf(double(x)) >= target) return x;
  throw NoSolutionError(std::string("no ") + what + " up to " + std::to_string(limit) + " reaches the target");
}

}  // namespace

int estimate_capacity(const Distribution& degree_dist, double alpha, int max_degree) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (max_degree < 1) throw ConfigError("max_degree must be >= 1");
  return smallest_covering(degree_dist, alpha, max_degree, "window capacity");
}

int estimate_timeout(const Distribution& span_dist, double beta, int max_t) {
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0,1)");
  if (max_t < 1) throw ConfigError("max_t must be >= 1");
  return smallest_covering(span_dist, 1.0 - beta, max_t, "timeout");
}

WindowParams estimate_window_params(const Distribution& degree_dist, const Distribution& span_dist, double alpha,
                                    double beta) {
  return {estimate_capacity(degree_dist, alpha), estimate_timeout(span_dist, beta), alpha, beta};
}

}  // namespace streamint
