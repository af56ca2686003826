#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "streamint/distributions.hpp"
#include "streamint/errors.hpp"

namespace streamint {

namespace {

constexpr double kAlphaTol = 1e-12;
constexpr double kExitTol = 1e-12;

Eigen::VectorXd solve_negated(const PhaseTypeDist& d, const Eigen::VectorXd& rhs) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(-d.generator());
  if (!lu.isInvertible()) throw NumericalError("PH generator block is singular");
  return lu.solve(rhs);
}

}  // namespace

PhaseTypeDist::PhaseTypeDist(Eigen::VectorXd alpha, Eigen::MatrixXd generator)
    : alpha_(std::move(alpha)), generator_(std::move(generator)) {
  if (alpha_.size() == 0) throw InvalidDistribution("PH order must be >= 1");
  if (generator_.rows() != generator_.cols()) throw InvalidDistribution("PH generator must be square");
  if (generator_.rows() != alpha_.size()) throw InvalidDistribution("PH alpha length does not match generator");
  if (!alpha_.allFinite() || !generator_.allFinite()) throw InvalidDistribution("PH parameters must be finite");
}

Eigen::VectorXd PhaseTypeDist::exit_rates() const { return -generator_.rowwise().sum(); }

bool PhaseTypeDist::is_valid() const {
  if ((alpha_.array() < 0.0).any() || alpha_.sum() > 1.0 + kAlphaTol) return false;
  const int n = order();
  for (int i = 0; i < n; ++i) {
    if (!(generator_(i, i) < 0.0)) return false;
    for (int j = 0; j < n; ++j)
      if (i != j && generator_(i, j) < 0.0) return false;
  }
  return (exit_rates().array() >= -kExitTol).all();
}

Eigen::MatrixXd matexp(const Eigen::MatrixXd& a, double x) {
  if (!(x >= 0.0)) throw DomainError("matexp requires x >= 0");
  const Eigen::MatrixXd scaled = a * x;
  return scaled.exp();
}

double ph_cdf(double x, const PhaseTypeDist& d) {
  if (!(x >= 0.0)) throw DomainError("distribution evaluated at negative or NaN x");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.order());
  const double survival = d.alpha().dot(matexp(d.generator(), x) * ones);
  return std::clamp(1.0 - survival, 0.0, 1.0);
}

double ph_pdf(double x, const PhaseTypeDist& d) {
  if (!(x >= 0.0)) throw DomainError("distribution evaluated at negative or NaN x");
  return d.alpha().dot(matexp(d.generator(), x) * d.exit_rates());
}

double ph_mean(const PhaseTypeDist& d) { return ph_moment(d, 1); }

double ph_moment(const PhaseTypeDist& d, int order) {
  if (order < 1) throw DomainError("moment order must be >= 1");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d.order());
  double factorial = 1.0;
  for (int i = 1; i <= order; ++i) {
    v = solve_negated(d, v);
    factorial *= i;
  }
  return factorial * d.alpha().dot(v);
}

double ph_scv(const PhaseTypeDist& d) {
  const double m1 = ph_moment(d, 1);
  const double m2 = ph_moment(d, 2);
  return m2 / (m1 * m1) - 1.0;
}

PhaseTypeDist to_phase_type(const ErlangDist& d) {
  const int k = d.phases();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(k);
  alpha(0) = 1.0;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = -d.rate();
    if (i + 1 < k) t(i, i + 1) = d.rate();
  }
  return PhaseTypeDist(std::move(alpha), std::move(t));
}

PhaseTypeDist to_phase_type(const HyperErlangDist& d) {
  int n = 0;
  for (const auto& b : d.branches()) n += b.erlang.phases();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  int offset = 0;
  for (const auto& b : d.branches()) {
    const int k = b.erlang.phases();
    const double r = b.erlang.rate();
    alpha(offset) = b.weight;
    for (int i = 0; i < k; ++i) {
      t(offset + i, offset + i) = -r;
      if (i + 1 < k) t(offset + i, offset + i + 1) = r;
    }
    offset += k;
  }
  return PhaseTypeDist(std::move(alpha), std::move(t));
}

ValidatedGenerator validate_generator(const PhaseTypeDist& d, RepairPolicy policy) {
  const int n = d.order();
  Eigen::VectorXd alpha = d.alpha();
  Eigen::MatrixXd t = d.generator();
  std::vector<RepairEntry> log;

  for (int i = 0; i < n; ++i) {
    if (alpha(i) < 0.0) {
      log.push_back({1, i + 1, alpha(i), 0.0, "negative initial probability"});
      alpha(i) = 0.0;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && t(i, j) < 0.0) {
        log.push_back({i + 1, j + 1, t(i, j), 0.0, "negative off-diagonal rate"});
        t(i, j) = 0.0;
      }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += t(i, j);
    const bool bad_diag = !(t(i, i) < 0.0);
    const bool bad_exit = -(t(i, i) + off) < -kExitTol;
    if (bad_diag || bad_exit) {
      if (off <= 0.0) {
        std::ostringstream os;
        os << "state " << i + 1 << " has no outflow and cannot be repaired";
        throw ValidationError(os.str());
      }
      log.push_back({i + 1, i + 1, t(i, i), -off, bad_diag ? "non-negative diagonal" : "negative exit rate"});
      t(i, i) = -off;
    }
  }
  const double total = alpha.sum();
  if (total <= 0.0) throw ValidationError("initial vector has no mass");
  if (std::abs(total - 1.0) > kAlphaTol && (total > 1.0 || !log.empty())) {
    log.push_back({0, 0, total, 1.0, "initial vector renormalized"});
    alpha /= total;
  }

  if (policy == RepairPolicy::Strict && !log.empty()) {
    std::ostringstream os;
    os << "invalid PH generator:";
    for (const auto& e : log) {
      if (e.row == 0) os << " alpha sum=" << e.before;
      else if (e.col == e.row) os << " (" << e.row << "," << e.col << ")=" << e.before << " [" << e.note << "]";
      else os << " (" << e.row << "," << e.col << ")=" << e.before;
    }
    throw ValidationError(os.str());
  }
  if (log.empty()) return {d, {}};
  return {PhaseTypeDist(std::move(alpha), std::move(t)), std::move(log)};
}

PhaseTypeSampler::PhaseTypeSampler(const PhaseTypeDist& d) {
  if (!d.is_valid()) throw ValidationError("cannot sample from an invalid PH generator");
  const int n = d.order();
  const Eigen::VectorXd exit = d.exit_rates();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) initial_cum_.push_back(acc += d.alpha()(i));
  states_.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& s = states_[i];
    s.rate = -d.generator()(i, i);
    double c = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) c += d.generator()(i, j) / s.rate;
      s.cum.push_back(c);
    }
    s.cum.push_back(c + std::max(exit(i), 0.0) / s.rate);
  }
}

double PhaseTypeSampler::operator()(Rng& rng) const {
  const int n = static_cast<int>(states_.size());
  double u = rng.uniform();
  int state = 0;
  while (state < n && u >= initial_cum_[state]) ++state;
  if (state == n) return 0.0;  // atom at zero when sum(alpha) < 1
  double t = 0.0;
  for (;;) {
    const auto& s = states_[state];
    t += rng.exponential(s.rate);
    const double v = rng.uniform() * s.cum.back();
    int next = 0;
    while (next < n && v >= s.cum[next]) ++next;
    if (next == n) return t;
    state = next;
  }
}

double sample(const PhaseTypeDist& d, Rng& rng) { return PhaseTypeSampler(d)(rng); }

}  // namespace streamint
