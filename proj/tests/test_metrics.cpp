#include <doctest.h>

#include <map>

#include "streamint/errors.hpp"
#include "streamint/metrics.hpp"
#include "streamint/pipeline.hpp"

using namespace streamint;

namespace {

// Rows: instance 0 (degree 3) at t=0, instance 1 (degree 2) at t=5,
// instance 2 (degree 1) at t=9.
Trace small_trace() {
  Trace t;
  t.partitions = 1;
  auto add = [&](std::int64_t ts, InstanceId inst) {
    InvocationTuple r;
    r.timestamp_ms = ts;
    r.user_id = "u";
    r.service_id = "s";
    r.head_id = "h";
    r.truth_instance = inst;
    t.rows.push_back(r);
  };
  add(0, 100);
  add(1, 100);
  add(2, 100);
  add(5, 200);
  add(6, 200);
  add(9, 300);
  return t;
}

EmittedInstance window(std::vector<std::uint32_t> members) {
  EmittedInstance e;
  e.k = members.size();
  e.members = std::move(members);
  return e;
}

// Completeness re-derived from member lists with ordered maps: label
// majority per window, then best own count per label.
double brute_completeness(const std::vector<EmittedInstance>& emitted, const Trace& trace, double gamma) {
  std::map<InstanceId, std::size_t> degree;
  std::map<InstanceId, std::int64_t> first;
  for (const auto& r : trace.rows) {
    ++degree[r.truth_instance];
    if (!first.count(r.truth_instance) || r.timestamp_ms < first[r.truth_instance])
      first[r.truth_instance] = r.timestamp_ms;
  }
  std::map<InstanceId, std::size_t> best;
  for (const auto& e : emitted) {
    std::map<InstanceId, std::size_t> c;
    for (auto ref : e.members) ++c[trace.rows[ref].truth_instance];
    if (c.empty()) continue;
    InstanceId win = c.begin()->first;
    for (const auto& [lab, n] : c) {
      const auto wn = c[win];
      if (n > wn || (n == wn && (first[lab] < first[win] || (first[lab] == first[win] && lab < win)))) win = lab;
    }
    best[win] = std::max(best[win], c[win]);
  }
  std::size_t hit = 0;
  for (const auto& [lab, n] : degree)
    if (double(best[lab]) >= gamma * double(n) - 1e-12) ++hit;
  return double(hit) / double(degree.size());
}

}  // namespace

TEST_CASE("ground truth degrees and arrivals") {
  const auto t = small_trace();
  const GroundTruth g(t);
  CHECK(g.instance_count() == 3);
  CHECK(g.tuple_count() == 6);
  CHECK(g.degree(g.instance_of(0)) == 3);
  CHECK(g.primary_arrival(g.instance_of(4)) == 5);
  CHECK(g.label(g.instance_of(5)) == 300);
  CHECK_THROWS_AS(g.instance_of(6), InvalidInput);
}

TEST_CASE("matching: unanimous, majority, tie") {
  const auto t = small_trace();
  const GroundTruth g(t);
  const auto m = match_instances({window({0, 1, 2}), window({0, 1, 3}), window({2, 4}), window({})}, g);
  CHECK(g.label(*m[0]) == 100);
  CHECK(g.label(*m[1]) == 100);
  CHECK(g.label(*m[2]) == 100);  // tie between 100 and 200; 100 arrived first
  CHECK_FALSE(m[3].has_value());
  const auto m2 = match_instances({window({4, 2})}, g);
  CHECK(g.label(*m2[0]) == 100);  // member order does not matter
}

TEST_CASE("perfect run scores one everywhere") {
  const auto t = small_trace();
  const GroundTruth g(t);
  const std::vector<EmittedInstance> e = {window({0, 1, 2}), window({3, 4}), window({5})};
  for (double gamma : {1.0, 0.85, 0.75, 0.1}) CHECK(completeness(e, g, gamma) == 1.0);
  CHECK(capture_rate(e, g) == 1.0);
  const auto rc = recall_and_correct_rate(e, g);
  CHECK(rc.recall == 1.0);
  CHECK(rc.correct_rate == 1.0);
}

TEST_CASE("best window scoring, 13 of 15 at gamma 0.85") {
  Trace t;
  for (int i = 0; i < 15; ++i) {
    InvocationTuple r;
    r.timestamp_ms = i;
    r.truth_instance = 7;
    t.rows.push_back(r);
  }
  const GroundTruth g(t);
  std::vector<std::uint32_t> first13(13), last2 = {13, 14};
  for (std::uint32_t i = 0; i < 13; ++i) first13[i] = i;
  const std::vector<EmittedInstance> e = {window(first13), window(last2)};
  CHECK(completeness(e, g, 1.0) == 0.0);
  CHECK(completeness(e, g, 0.85) == 1.0);
  CHECK(capture_rate(e, g) == 1.0);
}

TEST_CASE("drops reduce the capture rate to (n - d) / n") {
  const auto t = small_trace();
  const GroundTruth g(t);
  const std::vector<EmittedInstance> e = {window({0, 2}), window({3, 4}), window({5})};
  CHECK(capture_rate(e, g) == doctest::Approx(5.0 / 6.0));
  CHECK(partial_instance_ratio(e, g) == 1.0);
  CHECK(completeness(e, g, 1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(completeness(e, g, 0.6) == 1.0);
}

TEST_CASE("mixed windows lower the correct rate") {
  const auto t = small_trace();
  const GroundTruth g(t);
  const std::vector<EmittedInstance> e = {window({0, 1, 2, 5}), window({3, 4})};
  const auto rc = recall_and_correct_rate(e, g);
  CHECK(rc.correct_rate == 0.5);
  CHECK(rc.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("gamma outside (0,1] and memberless emissions are rejected") {
  const auto t = small_trace();
  const GroundTruth g(t);
  CHECK_THROWS_AS(completeness({}, g, 0.0), ConfigError);
  CHECK_THROWS_AS(completeness({}, g, 1.5), ConfigError);
  EmittedInstance bare;
  bare.k = 3;
  CHECK_THROWS_AS(completeness({bare}, g, 1.0), ConfigError);
}

TEST_CASE("engine completeness equals a brute-force oracle on real runs") {
  const auto w = reference_workload(13, 3000);
  const auto trace = generate_trace(w.catalog, w.config);
  const GroundTruth g(trace);
  for (auto kind : {AggregateKind::Swa, AggregateKind::Sliding})
    for (auto strategy : {AssociationStrategy::Head, AssociationStrategy::HeadTimestampClient}) {
      PipelineConfig cfg;
      cfg.aggregate.kind = kind;
      cfg.aggregate.window = cfg.aggregate.step = 2000;
      cfg.strategy = strategy;
      const auto r = run_pipeline(trace, cfg);
      double prev = 1.0;
      for (double gamma : {0.5, 0.75, 0.85, 1.0}) {
        const double c = completeness(r.emitted, g, gamma);
        CHECK(c == doctest::Approx(brute_completeness(r.emitted, trace, gamma)).epsilon(1e-15));
        CHECK(c <= prev);
        prev = c;
      }
    }
}

TEST_CASE("report carries counts behind each ratio") {
  const auto t = small_trace();
  const GroundTruth g(t);
  const std::vector<EmittedInstance> e = {window({0, 1, 2, 5}), window({3})};
  const auto r = evaluate(e, g);
  CHECK(r.truth_instances == 3);
  CHECK(r.truth_tuples == 6);
  CHECK(r.captured_tuples == 5);
  CHECK(r.correct_instances == 1);
  CHECK(r.recalled_instances == 2);
  CHECK(r.capture_rate == doctest::Approx(double(r.captured_tuples) / r.truth_tuples));
  const auto j = to_json(r);
  CHECK(j.at("rows").contains("Integration Completeness(gamma=1)"));
  CHECK(j.at("rows").contains("Integration Completeness(gamma=0.85)"));
  CHECK(j.at("rows").contains("Recall"));
  CHECK(j.at("rows").contains("Correct rate"));
}
