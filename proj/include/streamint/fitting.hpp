#pragma once

#include <string>
#include <vector>

#include "streamint/distributions.hpp"

namespace streamint {

struct EmpiricalSample {
  std::vector<double> values;
  std::string unit;
};

struct EmOptions {
  int branch_count = 1;
  /// Upper bound on the total number of phases across all branches.
  int max_phases = 8;
  double tol = 1e-7;
  int max_iter = 2000;
};

struct HyperErlangFit {
  HyperErlangDist dist;
  double log_likelihood;
  /// Log-likelihood after each EM iteration of the winning phase configuration.
  std::vector<double> trace;
  int iterations;
  bool converged;
  /// Set when the sample has (numerically) no spread; dist is then a sharp
  /// Erlang centred on the sample value.
  bool degenerate;
};

/// Fits a Hyper-Erlang distribution by EM. Every assignment of phase counts
/// k_1 <= ... <= k_m with sum <= max_phases is tried and the configuration with
/// the highest final log-likelihood wins. Branch means are initialised by
/// k-means on log values.
HyperErlangFit fit_hyper_erlang_em(const EmpiricalSample& sample, const EmOptions& opts);

double log_likelihood(const HyperErlangDist& d, const std::vector<double>& values);

}  // namespace streamint
