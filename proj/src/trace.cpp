#include "streamint/trace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamint/errors.hpp"

namespace streamint {

namespace {

std::string user_name(std::uint64_t idx) {
  return "10." + std::to_string((idx >> 16) & 0xff) + "." + std::to_string((idx >> 8) & 0xff) + "." +
         std::to_string(idx & 0xff);
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

ServiceCatalog build_catalog(std::size_t count, const Distribution& degree_dist, std::uint64_t seed,
                             const CatalogOptions& opts) {
  if (count == 0) throw ConfigError("catalog needs at least one service");
  if (opts.partitions < 1) throw ConfigError("partition count must be >= 1");
  Rng rng(seed);
  Rng share_rng = rng.fork();
  ServiceCatalog cat;
  cat.partitions = opts.partitions;
  cat.services.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double draw = degree_dist.sample(rng);
    ServiceDef s;
    s.service_id = "S" + std::to_string(i);
    s.head_id = s.service_id;
    s.degree = std::max(1, static_cast<int>(std::lround(draw)));
    for (int j = 0; j < s.degree; ++j) {
      s.sub_services.push_back(j == 0 ? s.service_id : s.service_id + "." + std::to_string(j));
      s.partition_of_subservice.push_back(j % opts.partitions);
      s.declared_head.push_back(s.head_id);
    }
    if (opts.shared_atomics && i > 0) {
      const ServiceDef& prev = cat.services.back();
      for (int j = 1; j < s.degree && j < prev.degree; ++j) {
        if (share_rng.uniform() < opts.shared_fraction) {
          s.sub_services[j] = prev.sub_services[j];
          s.partition_of_subservice[j] = prev.partition_of_subservice[j];
          s.declared_head[j] = prev.declared_head[j];
        }
      }
    }
    cat.services.push_back(std::move(s));
  }
  return cat;
}

std::vector<std::size_t> Trace::partition_rows(int partition) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].partition == partition) out.push_back(i);
  return out;
}

Trace generate_trace(const ServiceCatalog& catalog, const TraceConfig& cfg) {
  if (catalog.services.empty()) throw ConfigError("catalog is empty");
  if (cfg.instance_count == 0 || cfg.user_pool == 0) throw ConfigError("instance_count and user_pool must be positive");
  if (!(cfg.repeat_factor >= 1.0)) throw ConfigError("repeat_factor must be >= 1");
  if (!(cfg.arrival_unit_ms > 0.0) || !(cfg.span_unit_ms >= 0.0)) throw ConfigError("time units must be positive");

  Rng master(cfg.seed);
  Rng arrival_rng = master.fork();
  Rng choice_rng = master.fork();
  Rng user_rng = master.fork();
  Rng span_rng = master.fork();
  Rng place_rng = master.fork();

  const std::size_t pages = std::min(
      catalog.services.size(),
      static_cast<std::size_t>(std::ceil(double(cfg.instance_count) / cfg.repeat_factor)));
  std::vector<std::size_t> deck(pages);
  std::iota(deck.begin(), deck.end(), std::size_t{0});
  std::size_t deck_pos = pages;

  struct Row {
    InvocationTuple t;
    std::size_t seq;
  };
  std::vector<Row> rows;
  double clock_ms = 0.0;
  std::size_t seq = 0;
  for (std::size_t inst = 0; inst < cfg.instance_count; ++inst) {
    clock_ms += cfg.arrival_dist.sample(arrival_rng) * cfg.arrival_unit_ms;
    if (deck_pos == pages) {
      shuffle(deck, choice_rng);
      deck_pos = 0;
    }
    const ServiceDef& svc = catalog.services[deck[deck_pos++]];
    const std::string user = user_name(user_rng.below(cfg.user_pool));
    const double span_raw = cfg.span_dist.sample(span_rng) * cfg.span_unit_ms;
    const auto span_ms = static_cast<std::int64_t>(std::floor(std::max(0.0, span_raw)));
    const auto arrival_ms = static_cast<std::int64_t>(std::floor(clock_ms));
    const std::int64_t end_ms = arrival_ms + span_ms;

    for (int j = 0; j < svc.degree; ++j) {
      std::int64_t ts = arrival_ms;
      if (j > 0) {
        if (cfg.placement == Placement::Uniform) {
          ts += static_cast<std::int64_t>(place_rng.below(static_cast<std::uint64_t>(span_ms) + 1));
        } else {
          ts += svc.degree > 1 ? span_ms * j / (svc.degree - 1) : 0;
        }
      }
      InvocationTuple t;
      t.timestamp_ms = ts;
      t.user_id = user;
      t.service_id = svc.sub_services[j];
      t.head_id = svc.declared_head[j];
      t.instance_ts_s = arrival_ms / 1000;
      t.response_ms = end_ms - ts;
      t.truth_instance = inst;
      t.partition = svc.partition_of_subservice[j] % std::max(1, catalog.partitions);
      rows.push_back({std::move(t), seq++});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.t.timestamp_ms != b.t.timestamp_ms) return a.t.timestamp_ms < b.t.timestamp_ms;
    if (a.t.partition != b.t.partition) return a.t.partition < b.t.partition;
    return a.seq < b.seq;
  });
  Trace trace;
  trace.partitions = catalog.partitions;
  trace.rows.reserve(rows.size());
  for (auto& r : rows) trace.rows.push_back(std::move(r.t));
  return trace;
}

ErlangDist reference_degree_dist() { return ErlangDist(8.7963, 100); }

HyperErlangDist reference_span_dist() {
  return HyperErlangDist({{0.0247, ErlangDist(0.0404, 1)}, {0.9753, ErlangDist(0.3666, 4)}});
}

PhaseTypeDist reference_arrival_ph_raw() {
  Eigen::VectorXd a(2);
  a << 1.0, 0.0;
  Eigen::MatrixXd t(2, 2);
  t << -0.1452, -0.0329, 0.0, -0.1191;
  return PhaseTypeDist(a, t);
}

PhaseTypeDist reference_union_arrival_ph() {
  Eigen::VectorXd a(2);
  a << 1.0, 0.0;
  Eigen::MatrixXd t(2, 2);
  t << -1.1215, 0.0001, 0.0, -0.0021;
  return PhaseTypeDist(a, t);
}

PhaseTypeDist reference_union_service_ph_raw() {
  Eigen::VectorXd a(4);
  a << 1.0, 0.0, 0.0, 0.0;
  Eigen::MatrixXd t(4, 4);
  t << -378.3987, 378.3987, 0.0, 0.0,  //
      0.0, -378.3987, 378.3987, 0.0,   //
      0.0, 0.0, -12669.0969, -0.0000346, //
      0.0, 0.0, 0.0, -0.05120;
  return PhaseTypeDist(a, t);
}

PhaseTypeDist scale_time(const PhaseTypeDist& d, double factor) {
  if (!(factor > 0.0)) throw ConfigError("time scale factor must be positive");
  return PhaseTypeDist(d.alpha(), d.generator() / factor);
}

PhaseTypeDist reference_arrival_ph() {
  const auto repaired = validate_generator(reference_arrival_ph_raw(), RepairPolicy::Repair).dist;
  return scale_time(repaired, 9.7780 / ph_mean(repaired));
}

ReferenceWorkload reference_workload(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  const std::uint64_t catalog_seed = rng.next_u64();
  const std::uint64_t trace_seed = rng.next_u64();
  ReferenceWorkload w{build_catalog(10000, reference_degree_dist(), catalog_seed), TraceConfig{}};
  w.config.instance_count = instances;
  w.config.arrival_dist = reference_arrival_ph();
  w.config.span_dist = reference_span_dist();
  w.config.user_pool = 5000;
  w.config.repeat_factor = 1.3997;
  w.config.seed = trace_seed;
  w.config.arrival_unit_ms = 1.0;
  w.config.span_unit_ms = 1000.0;
  return w;
}

StreamTuple to_stream_tuple(const InvocationTuple& t, std::uint32_t ref) {
  return {t.timestamp_ms, t.user_id, t.service_id, t.head_id, t.instance_ts_s, t.response_ms, ref};
}

std::optional<StreamTuple> Feed::next() {
  if (pos_ >= tuples_.size()) return std::nullopt;
  return tuples_[pos_++];
}

Replay::Replay(const Trace& trace, ReplayMode mode) : mode_(mode) {
  int parts = trace.partitions;
  for (const auto& r : trace.rows) {
    if (r.partition < 0) throw InvalidInput("negative partition index");
    parts = std::max(parts, r.partition + 1);
  }
  std::vector<std::vector<StreamTuple>> split(static_cast<std::size_t>(std::max(parts, 1)));
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& r = trace.rows[i];
    auto& dst = split[r.partition];
    if (!dst.empty() && dst.back().timestamp_ms > r.timestamp_ms)
      throw InvalidInput("trace partition " + std::to_string(r.partition) + " is not sorted at row " +
                         std::to_string(i + 1));
    dst.push_back(to_stream_tuple(r, static_cast<std::uint32_t>(i)));
  }
  for (auto& s : split) feeds_.emplace_back(std::move(s));
}

std::optional<StreamTuple> Replay::next_merged() {
  std::size_t best = feeds_.size();
  for (std::size_t p = 0; p < feeds_.size(); ++p) {
    const auto* t = feeds_[p].peek();
    if (t && (best == feeds_.size() || t->timestamp_ms < feeds_[best].peek()->timestamp_ms)) best = p;
  }
  if (best == feeds_.size()) return std::nullopt;
  auto t = feeds_[best].next();
  if (mode_ == ReplayMode::EventTime) now_ms_ = static_cast<double>(t->timestamp_ms);
  return t;
}

}  // namespace streamint
