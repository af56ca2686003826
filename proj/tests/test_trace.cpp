#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "streamint/errors.hpp"
#include "streamint/trace.hpp"

using namespace streamint;

namespace {

TraceConfig point_config(std::size_t instances, double span_s) {
  TraceConfig cfg;
  cfg.instance_count = instances;
  cfg.arrival_dist = PointMass{5.0};
  cfg.span_dist = PointMass{span_s};
  cfg.user_pool = 10;
  cfg.seed = 3;
  return cfg;
}

std::string serialize(const Trace& t) {
  std::ostringstream os;
  write_trace(t, os);
  return os.str();
}

}  // namespace

TEST_CASE("catalog degrees follow the degree distribution") {
  const auto cat = build_catalog(10000, reference_degree_dist(), 1);
  REQUIRE(cat.services.size() == 10000);
  double sum = 0.0;
  std::size_t small = 0;
  for (const auto& s : cat.services) {
    CHECK(s.degree >= 1);
    CHECK(std::size_t(s.degree) == s.sub_services.size());
    sum += s.degree;
    if (s.degree <= 15) ++small;
  }
  CHECK(std::abs(sum / 10000 / (100 / 8.7963) - 1.0) < 0.02);
  CHECK(double(small) / 10000 == doctest::Approx(0.99).epsilon(0.01));
}

TEST_CASE("point-mass catalog and partition round robin") {
  const auto cat = build_catalog(1, PointMass{3.0}, 42);
  REQUIRE(cat.services.size() == 1);
  const auto& s = cat.services[0];
  CHECK(s.degree == 3);
  CHECK(s.partition_of_subservice == std::vector<int>{0, 1, 0});
  CHECK(s.head_id == s.service_id);
  CHECK_THROWS_AS(build_catalog(0, PointMass{3.0}, 1), ConfigError);
}

TEST_CASE("zero-span instance: all tuples share timestamp and label") {
  const auto cat = build_catalog(1, PointMass{3.0}, 1);
  const auto trace = generate_trace(cat, point_config(1, 0.0));
  REQUIRE(trace.rows.size() == 3);
  for (const auto& r : trace.rows) {
    CHECK(r.timestamp_ms == trace.rows[0].timestamp_ms);
    CHECK(r.truth_instance == trace.rows[0].truth_instance);
    CHECK(r.response_ms == 0);
    CHECK(r.head_id == "S0");
  }
}

TEST_CASE("full-scale trace: conservation, invariants, density") {
  const auto w = reference_workload(7);
  const auto trace = generate_trace(w.catalog, w.config);
  std::map<InstanceId, std::size_t> count;
  std::map<InstanceId, std::int64_t> head_ts;
  for (const auto& r : trace.rows) {
    ++count[r.truth_instance];
    CHECK(r.instance_ts_s * 1000 <= r.timestamp_ms);
    CHECK(r.response_ms >= 0);
    if (r.service_id == r.head_id) head_ts[r.truth_instance] = r.timestamp_ms;
  }
  CHECK(count.size() == 13997);

  // Each label appears exactly degree times: rebuild the service of each
  // instance from its head row and compare.
  std::map<std::string, int> degree_of;
  for (const auto& s : w.catalog.services) degree_of[s.service_id] = s.degree;
  std::size_t expected_rows = 0;
  for (const auto& r : trace.rows)
    if (r.service_id == r.head_id && degree_of.count(r.service_id)) {
      CHECK(count[r.truth_instance] == std::size_t(degree_of[r.service_id]));
      expected_rows += std::size_t(degree_of[r.service_id]);
    }
  CHECK(expected_rows == trace.rows.size());

  // Global order is (timestamp, partition).
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const auto& a = trace.rows[i - 1];
    const auto& b = trace.rows[i];
    CHECK((a.timestamp_ms < b.timestamp_ms || (a.timestamp_ms == b.timestamp_ms && a.partition <= b.partition)));
  }

  // Inter-arrival of all tuples over the primary-arrival horizon.
  std::int64_t last_primary = 0;
  for (const auto& [id, ts] : head_ts) last_primary = std::max(last_primary, ts);
  std::size_t inside = 0;
  for (const auto& r : trace.rows)
    if (r.timestamp_ms <= last_primary) ++inside;
  const double gap = double(last_primary - trace.rows.front().timestamp_ms) / double(inside - 1);
  MESSAGE("union inter-arrival over the arrival horizon: " << gap << " ms");
  CHECK(gap > 0.9457 * 0.85);
  CHECK(gap < 0.9457 * 1.15);
}

TEST_CASE("generation is deterministic under a seed") {
  const auto w1 = reference_workload(11, 2000);
  const auto w2 = reference_workload(11, 2000);
  const auto w3 = reference_workload(12, 2000);
  const auto a = serialize(generate_trace(w1.catalog, w1.config));
  CHECK(a == serialize(generate_trace(w2.catalog, w2.config)));
  CHECK(a != serialize(generate_trace(w3.catalog, w3.config)));
}

TEST_CASE("repeat factor limits the distinct services used") {
  const auto cat = build_catalog(100, PointMass{2.0}, 1);
  auto cfg = point_config(40, 1.0);
  cfg.repeat_factor = 4.0;
  const auto trace = generate_trace(cat, cfg);
  std::set<std::string> heads;
  for (const auto& r : trace.rows) heads.insert(r.head_id);
  CHECK(heads.size() == 10);
}

TEST_CASE("shared atomics carry another head's id") {
  CatalogOptions opts;
  opts.shared_atomics = true;
  opts.shared_fraction = 1.0;
  const auto cat = build_catalog(3, PointMass{4.0}, 9, opts);
  CHECK(cat.services[1].sub_services[1] == cat.services[0].sub_services[1]);
  CHECK(cat.services[1].declared_head[1] == cat.services[0].head_id);
  CHECK(cat.services[0].declared_head[1] == cat.services[0].head_id);
}

TEST_CASE("CSV round trip is byte identical") {
  const auto w = reference_workload(5, 500);
  const auto t = generate_trace(w.catalog, w.config);
  const auto text = serialize(t);
  std::istringstream in(text);
  const auto back = read_trace(in);
  CHECK(back.rows == t.rows);
  CHECK(serialize(back) == text);
  CHECK(text.substr(0, text.find('\n')) == kTraceHeader);
}

TEST_CASE("header-only file is an empty trace") {
  std::istringstream in(std::string(kTraceHeader) + "\n");
  CHECK(read_trace(in).rows.empty());
}

TEST_CASE("malformed rows name their row number") {
  std::istringstream in(std::string(kTraceHeader) + "\n1,10.0.0.1,S0,S0\n");
  try {
    read_trace(in);
    FAIL("accepted a short row");
  } catch (const ParseError& e) {
    CHECK(e.row() == 1);
  }
  std::istringstream bad(std::string(kTraceHeader) + "\n1,10.0.0.1,S0,S0,0,5,0,0\nx,10.0.0.1,S0,S0,0,5,0,0\n");
  try {
    read_trace(bad);
    FAIL("accepted a non-numeric timestamp");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
  }
}

TEST_CASE("replay delivers every tuple in merged order") {
  Trace t;
  t.partitions = 2;
  auto row = [](std::int64_t ts, const char* svc, int part) {
    InvocationTuple r;
    r.timestamp_ms = ts;
    r.user_id = "u";
    r.service_id = svc;
    r.head_id = svc;
    r.partition = part;
    return r;
  };
  t.rows = {row(1, "A", 0), row(2, "B", 1), row(3, "A", 0), row(3, "C", 1)};
  Replay rp(t, ReplayMode::EventTime);
  std::vector<std::string> got;
  while (auto s = rp.next_merged()) {
    got.push_back(s->service_id + "@" + std::to_string(s->timestamp_ms));
    CHECK(rp.now_ms() == double(s->timestamp_ms));
  }
  CHECK(got == std::vector<std::string>{"A@1", "B@2", "A@3", "C@3"});

  Replay afap(t, ReplayMode::AsFastAsPossible);
  std::size_t n = 0;
  while (afap.next_merged()) ++n;
  CHECK(n == 4);
  CHECK(afap.now_ms() == 0.0);
}

TEST_CASE("replay rejects an unsorted partition") {
  Trace t;
  t.partitions = 1;
  InvocationTuple a, b;
  a.timestamp_ms = 5;
  b.timestamp_ms = 2;
  t.rows = {a, b};
  CHECK_THROWS_AS(Replay(t, ReplayMode::EventTime), InvalidInput);
}
