#pragma once

#include "streamint/distributions.hpp"

namespace streamint {

/// Window capacity n (tuples) and timeout t (seconds) for the small window
/// array, with the completeness target alpha and timeout rate beta that
/// produced them.
struct WindowParams {
  int capacity = 1;
  int timeout_s = 1;
  double alpha = 0.9;
  double beta = 0.05;
};

/// Smallest n in [1, max_degree] with CDF(n) >= alpha. Smallest-covering is
/// used instead of "closest" so coverage is guaranteed to reach alpha.
int estimate_capacity(const Distribution& degree_dist, double alpha, int max_degree = 1000);

/// Smallest integer t in [1, max_t] with CDF(t) >= 1 - beta.
int estimate_timeout(const Distribution& span_dist, double beta, int max_t = 3600);

WindowParams estimate_window_params(const Distribution& degree_dist, const Distribution& span_dist, double alpha,
                                    double beta);

}  // namespace streamint
