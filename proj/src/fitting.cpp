#include "streamint/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "streamint/errors.hpp"

namespace streamint {

namespace {

constexpr int kDegeneratePhases = 1000;

struct Cluster {
  double weight;
  double mean;
};

// 1-D Lloyd iterations on log values, seeded at evenly spaced quantiles.
std::vector<Cluster> kmeans_log(const std::vector<double>& sorted_values, int m) {
  const std::size_t n = sorted_values.size();
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(sorted_values[i]);

  std::vector<double> centers(m);
  for (int c = 0; c < m; ++c) centers[c] = logs[std::min(n - 1, (2 * c + 1) * n / (2 * m))];

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < m; ++c)
        if (std::abs(logs[i] - centers[c]) < std::abs(logs[i] - centers[best])) best = c;
      if (best != assign[i]) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<double> sum(m, 0.0);
    std::vector<std::size_t> count(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[assign[i]] += logs[i];
      ++count[assign[i]];
    }
    for (int c = 0; c < m; ++c)
      if (count[c] > 0) centers[c] = sum[c] / double(count[c]);
    if (!changed && iter > 0) break;
  }

  std::vector<Cluster> out(m, Cluster{0.0, 0.0});
  std::vector<std::size_t> count(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    out[assign[i]].mean += sorted_values[i];
    ++count[assign[i]];
  }
  const double overall = std::accumulate(sorted_values.begin(), sorted_values.end(), 0.0) / double(n);
  for (int c = 0; c < m; ++c) {
    // An empty cluster borrows the overall mean and a token weight.
    out[c].weight = count[c] > 0 ? double(count[c]) / double(n) : 1e-3;
    out[c].mean = count[c] > 0 ? out[c].mean / double(count[c]) : overall;
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) { return a.mean < b.mean; });
  return out;
}

void phase_configs(int m, int max_total, int min_k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == m) {
    out.push_back(cur);
    return;
  }
  const int used = std::accumulate(cur.begin(), cur.end(), 0);
  const int remaining = m - static_cast<int>(cur.size());
  for (int k = min_k; used + k * remaining <= max_total; ++k) {
    cur.push_back(k);
    phase_configs(m, max_total, k, cur, out);
    cur.pop_back();
  }
}

struct EmRun {
  std::vector<double> weight, rate;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

EmRun run_em(const std::vector<double>& x, const std::vector<double>& logx, const std::vector<int>& k,
             const std::vector<Cluster>& init, const EmOptions& opts) {
  const int m = static_cast<int>(k.size());
  const std::size_t n = x.size();
  EmRun run;
  run.weight.resize(m);
  run.rate.resize(m);
  double wsum = 0.0;
  for (int i = 0; i < m; ++i) {
    run.weight[i] = init[i].weight;
    run.rate[i] = k[i] / init[i].mean;
    wsum += run.weight[i];
  }
  for (auto& w : run.weight) w /= wsum;

  std::vector<double> lgk(m);
  for (int i = 0; i < m; ++i) lgk[i] = std::lgamma(double(k[i]));

  std::vector<double> resp_sum(m), resp_x(m), term(m);
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    std::fill(resp_sum.begin(), resp_sum.end(), 0.0);
    std::fill(resp_x.begin(), resp_x.end(), 0.0);
    std::vector<double> log_w(m), log_r(m);
    for (int i = 0; i < m; ++i) {
      log_w[i] = run.weight[i] > 0.0 ? std::log(run.weight[i]) : -std::numeric_limits<double>::infinity();
      log_r[i] = std::log(run.rate[i]);
    }
    double ll = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double top = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        term[i] = log_w[i] + k[i] * log_r[i] + (k[i] - 1) * logx[j] - run.rate[i] * x[j] - lgk[i];
        top = std::max(top, term[i]);
      }
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += std::exp(term[i] - top);
      ll += top + std::log(s);
      for (int i = 0; i < m; ++i) {
        const double r = std::exp(term[i] - top) / s;
        resp_sum[i] += r;
        resp_x[i] += r * x[j];
      }
    }
    run.trace.push_back(ll);
    run.iterations = iter + 1;
    if (iter > 0 && std::abs(ll - prev) <= opts.tol * std::abs(prev)) {
      run.converged = true;
      break;
    }
    prev = ll;
    for (int i = 0; i < m; ++i) {
      run.weight[i] = resp_sum[i] / double(n);
      if (resp_x[i] > 0.0) run.rate[i] = k[i] * resp_sum[i] / resp_x[i];
    }
  }
  return run;
}

}  // namespace

double log_likelihood(const HyperErlangDist& d, const std::vector<double>& values) {
  double ll = 0.0;
  for (double v : values) ll += std::log(hyper_erlang_pdf(v, d));
  return ll;
}

HyperErlangFit fit_hyper_erlang_em(const EmpiricalSample& sample, const EmOptions& opts) {
  if (opts.branch_count < 1) throw ConfigError("branch_count must be >= 1");
  if (opts.max_phases < opts.branch_count) throw ConfigError("max_phases must be >= branch_count");
  if (opts.tol <= 0.0 || opts.max_iter < 1) throw ConfigError("EM tolerance and iteration cap must be positive");
  const auto& raw = sample.values;
  if (raw.empty()) throw ConfigError("empty sample");
  if (raw.size() < std::size_t(10) * opts.branch_count)
    throw ConfigError("sample too small: need at least 10 values per branch");
  for (double v : raw)
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("sample values must be finite and non-negative");

  std::vector<double> x = raw;
  std::sort(x.begin(), x.end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  if (!(mean > 0.0)) throw DomainError("sample is identically zero");

  if (x.back() - x.front() <= 1e-12 * std::max(1.0, std::abs(mean))) {
    HyperErlangDist d({ErlangBranch{1.0, ErlangDist(kDegeneratePhases / mean, kDegeneratePhases)}});
    return {d, log_likelihood(d, x), {}, 0, true, true};
  }

  // Exact zeros have zero density under any k > 1 branch; nudge them inward.
  const double floor_value = 1e-9 * mean;
  for (auto& v : x) v = std::max(v, floor_value);
  std::vector<double> logx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) logx[i] = std::log(x[i]);

  const auto init = kmeans_log(x, opts.branch_count);
  std::vector<std::vector<int>> configs;
  std::vector<int> cur;
  phase_configs(opts.branch_count, opts.max_phases, 1, cur, configs);

  bool have_best = false;
  EmRun best;
  std::vector<int> best_k;
  for (const auto& k : configs) {
    EmRun run = run_em(x, logx, k, init, opts);
    if (!have_best || run.trace.back() > best.trace.back()) {
      best = std::move(run);
      best_k = k;
      have_best = true;
    }
  }

  std::vector<ErlangBranch> branches;
  const double total = std::accumulate(best.weight.begin(), best.weight.end(), 0.0);
  for (std::size_t i = 0; i < best_k.size(); ++i)
    branches.push_back({best.weight[i] / total, ErlangDist(best.rate[i], best_k[i])});
  HyperErlangDist dist(std::move(branches));
  const double final_ll = log_likelihood(dist, x);
  return {std::move(dist), final_ll, std::move(best.trace), best.iterations, best.converged, false};
}

}  // namespace streamint
