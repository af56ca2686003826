#include "streamint/queueing.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

#include "streamint/errors.hpp"

namespace streamint {

using nlohmann::json;

json to_json(const PerfIndicators& p) {
  return {{"L", p.L}, {"Lq", p.Lq}, {"W", p.W}, {"Wq", p.Wq}, {"Pbusy", p.Pbusy}, {"Ploss", p.Ploss}};
}

namespace {

struct PhParts {
  Eigen::VectorXd alpha;
  Eigen::MatrixXd t;
  Eigen::VectorXd exit;
  int order;
};

PhParts parts(const PhaseTypeDist& d, const char* what) {
  if (!d.is_valid()) throw ValidationError(std::string(what) + " PH generator is invalid; repair it first");
  if (std::abs(d.alpha().sum() - 1.0) > 1e-9)
    throw ConfigError(std::string(what) + " PH must not have an atom at zero");
  return {d.alpha(), d.generator(), d.exit_rates(), d.order()};
}

// Accumulates off-diagonal rates; the diagonal is filled in by solve().
class GeneratorBuilder {
 public:
  explicit GeneratorBuilder(std::size_t n) : n_(n), out_(n, 0.0) {}

  void add(std::size_t from, std::size_t to, double rate) {
    if (from == to || rate == 0.0) return;
    triplets_.emplace_back(int(from), int(to), rate);
    out_[from] += rate;
  }

  /// Solves pi Q = 0, sum(pi) = 1 with a sparse LU on Q^T (last equation
  /// swapped for normalization).
  Eigen::VectorXd solve(double* residual) const {
    const int n = int(n_);
    std::vector<Eigen::Triplet<double>> at;
    at.reserve(triplets_.size() + 2 * n_);
    for (const auto& t : triplets_)
      if (t.col() != n - 1) at.emplace_back(t.col(), t.row(), t.value());
    for (int s = 0; s < n; ++s) {
      if (s != n - 1) at.emplace_back(s, s, -out_[s]);
      at.emplace_back(n - 1, s, 1.0);
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(at.begin(), at.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw NumericalError("CTMC generator factorization failed");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::VectorXd pi = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !pi.allFinite()) throw NumericalError("CTMC steady-state solve failed");
    // one step of iterative refinement
    Eigen::VectorXd r = rhs - a * pi;
    pi += lu.solve(r);

    Eigen::VectorXd flow = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) flow(s) -= pi(s) * out_[s];
    for (const auto& t : triplets_) flow(t.col()) += pi(t.row()) * t.value();
    *residual = flow.cwiseAbs().maxCoeff();
    return pi;
  }

 private:
  std::size_t n_;
  std::vector<double> out_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

struct Observables {
  double in_system = 0.0;
  double waiting = 0.0;
  bool busy = false;
  bool full = false;
  int arrival_phase = 0;
};

CtmcSolution finish(const Eigen::VectorXd& pi, const std::vector<Observables>& obs, const PhParts& arr,
                    double residual) {
  CtmcSolution sol;
  sol.states = obs.size();
  sol.residual = residual;
  sol.pi_sum = pi.sum();
  sol.min_pi = pi.minCoeff();
  auto& p = sol.perf;
  double lambda = 0.0, busy = 0.0, full = 0.0;
  for (std::size_t s = 0; s < obs.size(); ++s) {
    const double w = pi(Eigen::Index(s));
    const double arrive = w * arr.exit(obs[s].arrival_phase);
    p.L += w * obs[s].in_system;
    p.Lq += w * obs[s].waiting;
    lambda += arrive;
    if (obs[s].busy) busy += arrive;
    if (obs[s].full) full += arrive;
  }
  p.lambda = lambda;
  p.Pbusy = busy / lambda;
  p.Ploss = full / lambda;
  const double accepted = p.accepted_rate();
  p.W = p.L / accepted;
  p.Wq = p.Lq / accepted;
  return sol;
}

void check_capacity(std::size_t states, std::size_t max_states) {
  if (states > max_states)
    throw CapacityError("queue model needs " + std::to_string(states) + " states; limit is " +
                        std::to_string(max_states));
}

}  // namespace

CtmcSolution solve_ph_ph_1_n(const PhQueueModel& model, std::size_t max_states) {
  const auto arr = parts(model.arrival, "arrival");
  const auto svc = parts(model.service, "service");
  const int n_cap = model.capacity;
  if (n_cap < 1) throw ConfigError("system capacity must be >= 1");
  const int m = arr.order, k = svc.order;

  // level 0: m states; level n >= 1: m * k states
  const std::size_t states = std::size_t(m) + std::size_t(n_cap) * m * k;
  check_capacity(states, max_states);
  auto idx = [&](int level, int i, int j) -> std::size_t {
    return level == 0 ? std::size_t(i) : std::size_t(m) + (std::size_t(level - 1) * m + i) * k + j;
  };

  GeneratorBuilder q(states);
  std::vector<Observables> obs(states);
  for (int level = 0; level <= n_cap; ++level) {
    const int jn = level == 0 ? 1 : k;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < jn; ++j) {
        const auto s = idx(level, i, j);
        obs[s] = {double(level), double(std::max(level - 1, 0)), level > 0, level == n_cap, i};
        for (int i2 = 0; i2 < m; ++i2)
          if (i2 != i) q.add(s, idx(level, i2, j), arr.t(i, i2));
        for (int i2 = 0; i2 < m; ++i2) {
          const double rate = arr.exit(i) * arr.alpha(i2);
          if (level == n_cap) q.add(s, idx(level, i2, j), rate);
          else if (level == 0)
            for (int j2 = 0; j2 < k; ++j2) q.add(s, idx(1, i2, j2), rate * svc.alpha(j2));
          else q.add(s, idx(level + 1, i2, j), rate);
        }
        if (level == 0) continue;
        for (int j2 = 0; j2 < k; ++j2)
          if (j2 != j) q.add(s, idx(level, i, j2), svc.t(j, j2));
        const double done = svc.exit(j);
        if (level == 1) q.add(s, idx(0, i, 0), done);
        else
          for (int j2 = 0; j2 < k; ++j2) q.add(s, idx(level - 1, i, j2), done * svc.alpha(j2));
      }
  }
  double residual = 0.0;
  const auto pi = q.solve(&residual);
  return finish(pi, obs, arr, residual);
}

CtmcSolution solve_batch_ph_ph_1_n(const PhQueueModel& model, std::size_t max_states) {
  const auto arr = parts(model.arrival, "arrival");
  const auto svc = parts(model.service, "service");
  const int n_cap = model.capacity, a = model.batch_min, b = model.batch_max;
  if (a < 1 || b < a) throw ConfigError("batch bounds need 1 <= a <= b");
  if (n_cap < b) throw ConfigError("system capacity must be at least the maximum batch size");
  const int m = arr.order, k = svc.order;

  // Idle states: w in [0, a), arrival phase. Busy states: batch size s in
  // [a, b], w in [0, N - s], arrival phase, service phase.
  const std::size_t idle_states = std::size_t(a) * m;
  std::vector<std::size_t> offset(b + 2, 0);
  std::size_t states = idle_states;
  for (int s = a; s <= b; ++s) {
    offset[s] = states;
    states += std::size_t(n_cap - s + 1) * m * k;
  }
  check_capacity(states, max_states);
  auto idle = [&](int w, int i) { return std::size_t(w) * m + i; };
  auto busy = [&](int w, int s, int i, int j) { return offset[s] + (std::size_t(w) * m + i) * k + j; };

  GeneratorBuilder q(states);
  std::vector<Observables> obs(states);

  for (int w = 0; w < a; ++w)
    for (int i = 0; i < m; ++i) {
      const auto st = idle(w, i);
      obs[st] = {double(w), double(w), false, w == n_cap, i};
      for (int i2 = 0; i2 < m; ++i2)
        if (i2 != i) q.add(st, idle(w, i2), arr.t(i, i2));
      for (int i2 = 0; i2 < m; ++i2) {
        const double rate = arr.exit(i) * arr.alpha(i2);
        if (w + 1 >= a) {
          const int s = std::min(b, w + 1);
          for (int j2 = 0; j2 < k; ++j2) q.add(st, busy(w + 1 - s, s, i2, j2), rate * svc.alpha(j2));
        } else {
          q.add(st, idle(w + 1, i2), rate);
        }
      }
    }

  for (int s = a; s <= b; ++s)
    for (int w = 0; w + s <= n_cap; ++w)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) {
          const auto st = busy(w, s, i, j);
          const bool full = w + s == n_cap;
          obs[st] = {double(w + s), double(w), true, full, i};
          for (int i2 = 0; i2 < m; ++i2)
            if (i2 != i) q.add(st, busy(w, s, i2, j), arr.t(i, i2));
          for (int i2 = 0; i2 < m; ++i2) {
            const double rate = arr.exit(i) * arr.alpha(i2);
            q.add(st, full ? busy(w, s, i2, j) : busy(w + 1, s, i2, j), rate);
          }
          for (int j2 = 0; j2 < k; ++j2)
            if (j2 != j) q.add(st, busy(w, s, i, j2), svc.t(j, j2));
          const double done = svc.exit(j);
          if (w >= a) {
            const int s2 = std::min(b, w);
            for (int j2 = 0; j2 < k; ++j2) q.add(st, busy(w - s2, s2, i, j2), done * svc.alpha(j2));
          } else {
            q.add(st, idle(w, i), done);
          }
        }

  double residual = 0.0;
  const auto pi = q.solve(&residual);
  return finish(pi, obs, arr, residual);
}

}  // namespace streamint
