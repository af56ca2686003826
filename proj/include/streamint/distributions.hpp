#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "streamint/rng.hpp"

namespace streamint {

/// Erlang(rate, phases): sum of `phases` exponentials with rate `rate`.
class ErlangDist {
 public:
  ErlangDist(double rate, int phases);

  double rate() const noexcept { return rate_; }
  int phases() const noexcept { return phases_; }
  double mean() const noexcept { return phases_ / rate_; }
  double variance() const noexcept { return phases_ / (rate_ * rate_); }

  friend bool operator==(const ErlangDist&, const ErlangDist&) = default;

 private:
  double rate_;
  int phases_;
};

struct ErlangBranch {
  double weight;
  ErlangDist erlang;
};

/// Probabilistic mixture of Erlang branches. Weights sum to 1 within 1e-12.
class HyperErlangDist {
 public:
  explicit HyperErlangDist(std::vector<ErlangBranch> branches);

  const std::vector<ErlangBranch>& branches() const noexcept { return branches_; }
  double mean() const noexcept;
  double second_moment() const noexcept;

 private:
  std::vector<ErlangBranch> branches_;
};

/// PH(alpha, T). The constructor checks shapes only; generator constraints are
/// the business of validate_generator(), because fitted matrices taken from elsewhere do not
/// always satisfy them and we need to be able to hold and inspect those.
class PhaseTypeDist {
 public:
  PhaseTypeDist(Eigen::VectorXd alpha, Eigen::MatrixXd generator);

  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  const Eigen::MatrixXd& generator() const noexcept { return generator_; }
  /// T0 = -T 1
  Eigen::VectorXd exit_rates() const;
  int order() const noexcept { return static_cast<int>(alpha_.size()); }

  /// True when every PH constraint holds (tolerance on alpha's sum only).
  bool is_valid() const;

 private:
  Eigen::VectorXd alpha_;
  Eigen::MatrixXd generator_;
};

/// Deterministic value; used for degenerate degree distributions.
struct PointMass {
  double value;
};

double erlang_pdf(double x, const ErlangDist& d);
double erlang_cdf(double x, const ErlangDist& d);
double hyper_erlang_pdf(double x, const HyperErlangDist& d);
double hyper_erlang_cdf(double x, const HyperErlangDist& d);

double ph_pdf(double x, const PhaseTypeDist& d);
double ph_cdf(double x, const PhaseTypeDist& d);
double ph_mean(const PhaseTypeDist& d);
/// Raw moment E[X^order] = order! * alpha (-T)^{-order} 1.
double ph_moment(const PhaseTypeDist& d, int order);
/// Squared coefficient of variation.
double ph_scv(const PhaseTypeDist& d);

PhaseTypeDist to_phase_type(const ErlangDist& d);
PhaseTypeDist to_phase_type(const HyperErlangDist& d);

/// exp(A x) by scaling and squaring with a Pade approximant.
Eigen::MatrixXd matexp(const Eigen::MatrixXd& a, double x);

double sample(const ErlangDist& d, Rng& rng);
double sample(const HyperErlangDist& d, Rng& rng);
/// Simulates the underlying absorbing chain. Requires a valid generator.
double sample(const PhaseTypeDist& d, Rng& rng);

enum class RepairPolicy { Strict, Repair };

struct RepairEntry {
  int row;  // 1-based, matching usual matrix notation
  int col;  // 0 refers to alpha; col == row to a diagonal
  double before;
  double after;
  std::string note;
};

struct ValidatedGenerator {
  PhaseTypeDist dist;
  std::vector<RepairEntry> log;
};

/// Strict: throws ValidationError listing every violated entry. Repair: clamps
/// negative off-diagonals to zero, resets any diagonal that would leave a
/// negative exit rate, renormalizes alpha, and logs each change.
ValidatedGenerator validate_generator(const PhaseTypeDist& d, RepairPolicy policy);

/// Value-semantic handle over the supported distribution families.
class Distribution {
 public:
  using Variant = std::variant<ErlangDist, HyperErlangDist, PhaseTypeDist, PointMass>;

  Distribution(ErlangDist d) : v_(std::move(d)) {}
  Distribution(HyperErlangDist d) : v_(std::move(d)) {}
  Distribution(PhaseTypeDist d) : v_(std::move(d)) {}
  Distribution(PointMass d) : v_(d) {}

  double pdf(double x) const;
  double cdf(double x) const;
  double mean() const;
  double sample(Rng& rng) const;
  std::string type_name() const;

  const Variant& variant() const noexcept { return v_; }

 private:
  Variant v_;
};

/// Exponential with the given rate, as a 1-phase Erlang.
inline ErlangDist exponential(double rate) { return ErlangDist(rate, 1); }

}  // namespace streamint

namespace streamint {

/// Caches the jump structure of a PH chain so repeated draws are cheap.
class PhaseTypeSampler {
 public:
  explicit PhaseTypeSampler(const PhaseTypeDist& d);
  double operator()(Rng& rng) const;

 private:
  struct State {
    double rate;               // total outflow, -T_ii
    std::vector<double> cum;   // cumulative jump probabilities; last slot is absorption
  };
  std::vector<double> initial_cum_;
  std::vector<State> states_;
};

}  // namespace streamint

#include <functional>

namespace streamint {

using Sampler = std::function<double(Rng&)>;

/// Reusable draw function; PH structure is precomputed once.
Sampler make_sampler(const Distribution& d);

/// Two-moment PH match: Erlang mixture for scv < 1, exponential at 1,
/// balanced-means hyperexponential above 1. scv == 0 gives a point mass.
Distribution two_moment_fit(double mean, double scv);

}  // namespace streamint
