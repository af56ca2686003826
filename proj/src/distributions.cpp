#include "streamint/distributions.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "streamint/errors.hpp"

namespace streamint {

namespace {

void require_nonnegative(double x) {
  if (!(x >= 0.0)) throw DomainError("distribution evaluated at negative or NaN x");
}

double log_erlang_pdf(double x, const ErlangDist& d) {
  const int k = d.phases();
  if (x == 0.0) {
    return k == 1 ? std::log(d.rate()) : -std::numeric_limits<double>::infinity();
  }
  return k * std::log(d.rate()) + (k - 1) * std::log(x) - d.rate() * x - std::lgamma(double(k));
}

}  // namespace

ErlangDist::ErlangDist(double rate, int phases) : rate_(rate), phases_(phases) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidDistribution("Erlang rate must be positive");
  if (phases < 1) throw InvalidDistribution("Erlang phase count must be >= 1");
}

HyperErlangDist::HyperErlangDist(std::vector<ErlangBranch> branches) : branches_(std::move(branches)) {
  if (branches_.empty()) throw InvalidDistribution("hyper-Erlang needs at least one branch");
  double total = 0.0;
  for (const auto& b : branches_) {
    if (!(b.weight >= 0.0 && b.weight <= 1.0)) throw InvalidDistribution("branch weight outside [0,1]");
    total += b.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidDistribution("branch weights do not sum to 1");
}

double HyperErlangDist::mean() const noexcept {
  double m = 0.0;
  for (const auto& b : branches_) m += b.weight * b.erlang.mean();
  return m;
}

double HyperErlangDist::second_moment() const noexcept {
  double m = 0.0;
  for (const auto& b : branches_) {
    const double k = b.erlang.phases(), r = b.erlang.rate();
    m += b.weight * k * (k + 1) / (r * r);
  }
  return m;
}

double erlang_pdf(double x, const ErlangDist& d) {
  require_nonnegative(x);
  return std::exp(log_erlang_pdf(x, d));
}

// Regularized lower incomplete gamma P(k, rate x); the textbook finite sum
// overflows its factorials long before k = 100.
double erlang_cdf(double x, const ErlangDist& d) {
  require_nonnegative(x);
  if (x == 0.0) return 0.0;
  return boost::math::gamma_p(double(d.phases()), d.rate() * x);
}

double hyper_erlang_pdf(double x, const HyperErlangDist& d) {
  double f = 0.0;
  for (const auto& b : d.branches()) f += b.weight * erlang_pdf(x, b.erlang);
  return f;
}

double hyper_erlang_cdf(double x, const HyperErlangDist& d) {
  double f = 0.0;
  for (const auto& b : d.branches()) f += b.weight * erlang_cdf(x, b.erlang);
  return f;
}

double sample(const ErlangDist& d, Rng& rng) {
  double s = 0.0;
  for (int i = 0; i < d.phases(); ++i) s += rng.exponential(d.rate());
  return s;
}

double sample(const HyperErlangDist& d, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const auto& br = d.branches();
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    acc += br[i].weight;
    if (u < acc) return sample(br[i].erlang, rng);
  }
  return sample(br.back().erlang, rng);
}

double Distribution::pdf(double x) const {
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ErlangDist>) return erlang_pdf(x, d);
        else if constexpr (std::is_same_v<T, HyperErlangDist>) return hyper_erlang_pdf(x, d);
        else if constexpr (std::is_same_v<T, PhaseTypeDist>) return ph_pdf(x, d);
        else {
          require_nonnegative(x);
          return 0.0;
        }
      },
      v_);
}

double Distribution::cdf(double x) const {
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ErlangDist>) return erlang_cdf(x, d);
        else if constexpr (std::is_same_v<T, HyperErlangDist>) return hyper_erlang_cdf(x, d);
        else if constexpr (std::is_same_v<T, PhaseTypeDist>) return ph_cdf(x, d);
        else {
          require_nonnegative(x);
          return x >= d.value ? 1.0 : 0.0;
        }
      },
      v_);
}

double Distribution::mean() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PhaseTypeDist>) return ph_mean(d);
        else if constexpr (std::is_same_v<T, PointMass>) return d.value;
        else return d.mean();
      },
      v_);
}

double Distribution::sample(Rng& rng) const {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PointMass>) return d.value;
        else return streamint::sample(d, rng);
      },
      v_);
}

std::string Distribution::type_name() const {
  switch (v_.index()) {
    case 0: return "erlang";
    case 1: return "hyper_erlang";
    case 2: return "ph";
    default: return "point";
  }
}

}  // namespace streamint

namespace streamint {

Sampler make_sampler(const Distribution& d) {
  if (const auto* ph = std::get_if<PhaseTypeDist>(&d.variant())) {
    return [s = PhaseTypeSampler(*ph)](Rng& rng) { return s(rng); };
  }
  return [d](Rng& rng) { return d.sample(rng); };
}

Distribution two_moment_fit(double mean, double scv) {
  if (!(mean > 0.0) || !(scv >= 0.0)) throw ConfigError("two-moment fit needs mean > 0 and scv >= 0");
  if (scv == 0.0) return PointMass{mean};
  if (std::abs(scv - 1.0) < 1e-12) return ErlangDist(1.0 / mean, 1);
  if (scv < 1.0) {
    // Mixture of Erlang(k-1) and Erlang(k) with a common rate (Tijms).
    const int k = static_cast<int>(std::ceil(1.0 / scv));
    const double p = (k * scv - std::sqrt(k * (1.0 + scv) - k * k * scv)) / (1.0 + scv);
    const double rate = (k - p) / mean;
    if (k == 1 || p <= 0.0) return ErlangDist(k / mean, k);
    return HyperErlangDist({{p, ErlangDist(rate, k - 1)}, {1.0 - p, ErlangDist(rate, k)}});
  }
  // Balanced means H2.
  const double p1 = 0.5 * (1.0 + std::sqrt((scv - 1.0) / (scv + 1.0)));
  const double p2 = 1.0 - p1;
  return HyperErlangDist({{p1, ErlangDist(2.0 * p1 / mean, 1)}, {p2, ErlangDist(2.0 * p2 / mean, 1)}});
}

}  // namespace streamint
