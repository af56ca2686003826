#include "streamint/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "streamint/dist_json.hpp"
#include "streamint/errors.hpp"
#include "streamint/fitting.hpp"
#include "streamint/metrics.hpp"
#include "streamint/params.hpp"
#include "streamint/pipeline.hpp"
#include "streamint/queueing.hpp"
#include "streamint/simulation.hpp"
#include "streamint/sizing.hpp"
#include "streamint/trace.hpp"

namespace streamint {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, std::size_t(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number list: '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

/// Shared bookkeeping for one subcommand run: where outputs go, what was
/// produced, and the effective option values.
class Run {
 public:
  Run(std::string command, fs::path out_dir, const CLI::App& sub, const std::vector<std::string>& args)
      : command_(std::move(command)), out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_dir_);
    for (const auto* opt : sub.get_options()) {
      const auto name = opt->get_single_name();
      if (name.empty() || name == "help") continue;
      if (opt->count() > 0) {
        const auto& r = opt->results();
        if (opt->get_type_size() == 0) config_[name] = true;
        else config_[name] = r.size() == 1 ? json(r[0]) : json(r);
      } else {
        config_[name] = opt->get_default_str();
      }
    }
    args_ = args;
  }

  fs::path path(const std::string& file) const { return out_dir_ / file; }
  void artifact(const std::string& file) { artifacts_.push_back(file); }
  void seed(std::uint64_t s) { seed_ = s; }
  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write_manifest() const {
    json arts = json::array();
    for (const auto& a : artifacts_) {
      const auto p = path(a);
      arts.push_back({{"path", a}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    json m = {{"tool", "streamint"},
              {"version", STREAMINT_VERSION},
              {"command", command_},
              {"argv", args_},
              {"config", config_},
              {"artifacts", arts},
              {"wall_time_s",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
    if (seed_) m["seed"] = *seed_;
    if (!extra_.empty()) m["notes"] = extra_;
    write_json(path("manifest.json"), m);
  }

 private:
  std::string command_;
  fs::path out_dir_;
  std::chrono::steady_clock::time_point start_;
  json config_ = json::object();
  json extra_ = json::object();
  std::vector<std::string> args_;
  std::vector<std::string> artifacts_;
  std::optional<std::uint64_t> seed_;
};

RepairPolicy policy_of(bool strict) { return strict ? RepairPolicy::Strict : RepairPolicy::Repair; }

Distribution load_dist(const std::string& file, RepairPolicy policy, std::vector<RepairEntry>* repairs = nullptr) {
  return load_distribution(file, policy, repairs);
}

double dist_scv(const Distribution& d) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ErlangDist>) return 1.0 / double(v.phases());
        else if constexpr (std::is_same_v<T, HyperErlangDist>) return v.second_moment() / (v.mean() * v.mean()) - 1.0;
        else if constexpr (std::is_same_v<T, PhaseTypeDist>) return ph_scv(v);
        else return 0.0;
      },
      d.variant());
}

PhaseTypeDist as_phase_type(const Distribution& d, const char* what) {
  return std::visit(
      [&](const auto& v) -> PhaseTypeDist {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>)
          throw ConfigError(std::string(what) + ": a point mass has no phase-type form; use mean/scv");
        else if constexpr (std::is_same_v<T, PhaseTypeDist>) return v;
        else return to_phase_type(v);
      },
      d.variant());
}

struct QueueSpec {
  Distribution arrival = exponential(1.0);
  Distribution service = exponential(1.0);
  std::optional<long> servers = 1;
  std::optional<long> capacity;
  int batch_min = 1;
  int batch_max = 1;
  std::vector<RepairEntry> repairs;
};

/// {"arrival": dist | {"mean","scv"}, "service": dist | {"mean","scv"},
///  "servers": c | "ample", "capacity": N | "unbounded", "batch": {"min","max"},
///  "repair": "repair" | "strict"}
QueueSpec queue_spec_from_json(const json& j, std::optional<bool> strict_flag) {
  QueueSpec q;
  try {
    bool strict = j.value("repair", std::string("repair")) == "strict";
    if (strict_flag) strict = *strict_flag;
    auto dist = [&](const char* key) -> Distribution {
      if (!j.contains(key)) throw ConfigError(std::string("model needs '") + key + "'");
      const auto& d = j.at(key);
      if (d.contains("type")) {
        std::vector<RepairEntry> log;
        auto out = validated(distribution_from_json(d), policy_of(strict), &log);
        q.repairs.insert(q.repairs.end(), log.begin(), log.end());
        return out;
      }
      return two_moment_fit(d.at("mean").get<double>(), d.at("scv").get<double>());
    };
    q.arrival = dist("arrival");
    q.service = dist("service");
    if (j.contains("servers")) {
      const auto& s = j.at("servers");
      if (s.is_string()) {
        if (s.get<std::string>() != "ample") throw ConfigError("servers must be a count or \"ample\"");
        q.servers.reset();
      } else {
        q.servers = s.get<long>();
      }
    }
    if (j.contains("capacity")) {
      const auto& c = j.at("capacity");
      if (c.is_string()) {
        if (c.get<std::string>() != "unbounded") throw ConfigError("capacity must be a count or \"unbounded\"");
      } else {
        q.capacity = c.get<long>();
      }
    }
    if (j.contains("batch")) {
      q.batch_min = j.at("batch").at("min").get<int>();
      q.batch_max = j.at("batch").at("max").get<int>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("queue model: ") + e.what());
  }
  if (q.servers && *q.servers < 1) throw ConfigError("servers must be >= 1");
  if (q.capacity && *q.capacity < 1) throw ConfigError("capacity must be >= 1");
  if (q.batch_min < 1 || q.batch_max < q.batch_min) throw ConfigError("batch bounds need 1 <= min <= max");
  return q;
}

json repairs_json(const std::vector<RepairEntry>& repairs) {
  json a = json::array();
  for (const auto& r : repairs) a.push_back(to_json(r));
  return a;
}

// ---- gen-trace ----

struct GenTraceOpts {
  std::size_t instances = 13997;
  std::size_t services = 10000;
  std::size_t users = 5000;
  double repeat_factor = 1.3997;
  int partitions = 2;
  bool shared_atomics = false;
  double shared_fraction = 0.25;
  std::string degree_dist, span_dist, arrival_dist;
  double arrival_unit_ms = 1.0;
  double span_unit_ms = 1000.0;
  std::string placement = "uniform";
};

void add_gen_trace(CLI::App& sub, GenTraceOpts& o) {
  sub.add_option("--instances", o.instances, "Number of service instances");
  sub.add_option("--services", o.services, "Catalog size");
  sub.add_option("--users", o.users, "User pool size");
  sub.add_option("--repeat-factor", o.repeat_factor, "Instances per distinct service");
  sub.add_option("--partitions", o.partitions, "Monitoring streams");
  sub.add_flag("--shared-atomics", o.shared_atomics, "Share atomic services between heads");
  sub.add_option("--shared-fraction", o.shared_fraction, "Fraction of atomics shared");
  sub.add_option("--degree-dist", o.degree_dist, "Degree distribution JSON");
  sub.add_option("--span-dist", o.span_dist, "Instance span distribution JSON");
  sub.add_option("--arrival-dist", o.arrival_dist, "Primary inter-arrival distribution JSON");
  sub.add_option("--arrival-unit-ms", o.arrival_unit_ms, "Milliseconds per arrival-distribution unit");
  sub.add_option("--span-unit-ms", o.span_unit_ms, "Milliseconds per span-distribution unit");
  sub.add_option("--placement", o.placement, "Subordinate placement: uniform|even")
      ->check(CLI::IsMember({"uniform", "even"}));
}

json cmd_gen_trace(const GenTraceOpts& o, std::uint64_t seed, Run& run) {
  if (o.instances == 0 || o.services == 0 || o.users == 0) throw ConfigError("counts must be positive");
  if (o.partitions < 1) throw ConfigError("partitions must be >= 1");
  Rng rng(seed);
  const std::uint64_t catalog_seed = rng.next_u64();
  const std::uint64_t trace_seed = rng.next_u64();

  const Distribution degree =
      o.degree_dist.empty() ? Distribution(reference_degree_dist()) : load_dist(o.degree_dist, RepairPolicy::Repair);
  CatalogOptions copts;
  copts.partitions = o.partitions;
  copts.shared_atomics = o.shared_atomics;
  copts.shared_fraction = o.shared_fraction;
  const auto catalog = build_catalog(o.services, degree, catalog_seed, copts);

  TraceConfig cfg;
  cfg.instance_count = o.instances;
  cfg.arrival_dist =
      o.arrival_dist.empty() ? Distribution(reference_arrival_ph()) : load_dist(o.arrival_dist, RepairPolicy::Repair);
  cfg.span_dist = o.span_dist.empty() ? Distribution(reference_span_dist()) : load_dist(o.span_dist, RepairPolicy::Repair);
  cfg.user_pool = o.users;
  cfg.repeat_factor = o.repeat_factor;
  cfg.seed = trace_seed;
  cfg.arrival_unit_ms = o.arrival_unit_ms;
  cfg.span_unit_ms = o.span_unit_ms;
  cfg.placement = o.placement == "even" ? Placement::EvenlySpaced : Placement::Uniform;
  const auto trace = generate_trace(catalog, cfg);

  write_trace(trace, run.path("trace.csv"));
  run.artifact("trace.csv");
  std::int64_t first = trace.rows.empty() ? 0 : trace.rows.front().timestamp_ms;
  std::int64_t last = trace.rows.empty() ? 0 : trace.rows.back().timestamp_ms;
  json summary = {{"rows", trace.rows.size()},
                  {"instances", o.instances},
                  {"partitions", trace.partitions},
                  {"duration_ms", last - first},
                  {"mean_interarrival_ms",
                   trace.rows.size() > 1 ? double(last - first) / double(trace.rows.size() - 1) : 0.0}};
  write_json(run.path("summary.json"), summary);
  run.artifact("summary.json");
  return summary;
}

// ---- fit-dist ----

struct FitOpts {
  std::string input;
  std::string column;
  std::string trace;
  std::string quantity = "degree";
  int branches = 1;
  int max_phases = 8;
  double tol = 1e-7;
  int max_iter = 2000;
  bool emit_curves = false;
  int grid_points = 200;
  std::string unit;
};

void add_fit(CLI::App& sub, FitOpts& o) {
  sub.add_option("--input", o.input, "Sample file: one value per line, or CSV with --column");
  sub.add_option("--column", o.column, "CSV column holding the sample");
  sub.add_option("--trace", o.trace, "Take the sample from a trace instead");
  sub.add_option("--quantity", o.quantity, "Trace quantity: degree|span (span in seconds)")
      ->check(CLI::IsMember({"degree", "span"}));
  sub.add_option("--branches", o.branches, "Hyper-Erlang branch count");
  sub.add_option("--max-phases", o.max_phases, "Upper bound on total phases");
  sub.add_option("--tol", o.tol, "Relative log-likelihood tolerance");
  sub.add_option("--max-iter", o.max_iter, "EM iteration cap");
  sub.add_flag("--emit-curves", o.emit_curves, "Write (x, pdf, cdf) grid CSV");
  sub.add_option("--grid-points", o.grid_points, "Points in the curve grid");
  sub.add_option("--unit", o.unit, "Unit label for the sample");
}

std::vector<double> read_sample(const FitOpts& o) {
  std::vector<double> values;
  if (!o.trace.empty()) {
    const auto trace = read_trace(fs::path(o.trace));
    std::map<InstanceId, std::pair<std::int64_t, std::int64_t>> span;  // first ts, last end
    std::map<InstanceId, std::size_t> degree;
    for (const auto& r : trace.rows) {
      ++degree[r.truth_instance];
      auto [it, fresh] = span.try_emplace(r.truth_instance, r.timestamp_ms, r.timestamp_ms + r.response_ms);
      if (!fresh) {
        it->second.first = std::min(it->second.first, r.timestamp_ms);
        it->second.second = std::max(it->second.second, r.timestamp_ms + r.response_ms);
      }
    }
    if (o.quantity == "degree")
      for (const auto& [id, n] : degree) values.push_back(double(n));
    else
      for (const auto& [id, s] : span) values.push_back(double(s.second - s.first) / 1000.0);
    return values;
  }
  if (o.input.empty()) throw ConfigError("fit-dist needs --input or --trace");
  std::ifstream in(o.input);
  if (!in) throw ConfigError("cannot open " + o.input);
  std::string line;
  std::size_t row = 0;
  int col = -1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (col < 0) {
      col = 0;
      if (!o.column.empty()) {
        auto it = std::find(fields.begin(), fields.end(), o.column);
        if (it == fields.end()) throw ParseError("column '" + o.column + "' not in header", 0);
        col = int(it - fields.begin());
        continue;
      }
      char* end = nullptr;
      std::strtod(fields[0].c_str(), &end);
      if (end == fields[0].c_str()) continue;  // header line
    }
    if (std::size_t(col) >= fields.size()) throw ParseError("missing column", row);
    char* end = nullptr;
    const double v = std::strtod(fields[std::size_t(col)].c_str(), &end);
    if (end == fields[std::size_t(col)].c_str() || *end != '\0') throw ParseError("not a number", row);
    values.push_back(v);
  }
  return values;
}

json cmd_fit(const FitOpts& o, Run& run) {
  EmpiricalSample sample{read_sample(o), o.unit};
  if (sample.values.size() < std::size_t(10 * o.branches))
    throw ConfigError("sample needs at least 10 values per branch");
  EmOptions em{o.branches, o.max_phases, o.tol, o.max_iter};
  const auto fit = fit_hyper_erlang_em(sample, em);
  const Distribution d(fit.dist);

  auto sorted = sample.values;
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = d.cdf(sorted[i]);
    ks = std::max({ks, std::abs(f - double(i) / double(sorted.size())),
                   std::abs(f - double(i + 1) / double(sorted.size()))});
  }
  double sample_mean = 0.0;
  for (double v : sorted) sample_mean += v;
  sample_mean /= double(sorted.size());

  json result = {{"distribution", to_json(d)},
                 {"log_likelihood", fit.log_likelihood},
                 {"iterations", fit.iterations},
                 {"converged", fit.converged},
                 {"degenerate", fit.degenerate},
                 {"n", sorted.size()},
                 {"sample_mean", sample_mean},
                 {"fitted_mean", d.mean()},
                 {"ks_distance", ks},
                 {"log_likelihood_trace", fit.trace}};
  if (!o.unit.empty()) result["unit"] = o.unit;
  write_json(run.path("fit.json"), to_json(d));
  run.artifact("fit.json");
  write_json(run.path("fit_report.json"), result);
  run.artifact("fit_report.json");

  if (o.emit_curves) {
    if (o.grid_points < 2) throw ConfigError("grid needs at least 2 points");
    const double hi = sorted.back() * 1.1 + (sorted.back() > 0 ? 0.0 : 1.0);
    std::ostringstream csv;
    csv << "x,pdf,cdf,empirical_cdf\n";
    char buf[160];
    std::size_t below = 0;
    for (int i = 0; i < o.grid_points; ++i) {
      const double x = hi * double(i) / double(o.grid_points - 1);
      while (below < sorted.size() && sorted[below] <= x) ++below;
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g\n", x, d.pdf(x), d.cdf(x),
                    double(below) / double(sorted.size()));
      csv << buf;
    }
    write_text(run.path("curves.csv"), csv.str());
    run.artifact("curves.csv");
  }
  return result;
}

// ---- estimate-params ----

struct EstimateOpts {
  double alpha = 0.90;
  double beta = 0.05;
  std::string degree_dist, span_dist;
  int max_degree = 1000;
  int max_timeout = 3600;
};

void add_estimate(CLI::App& sub, EstimateOpts& o) {
  sub.add_option("--alpha", o.alpha, "Target share of instances fitting one window");
  sub.add_option("--beta", o.beta, "Tolerated timeout rate");
  sub.add_option("--degree-dist", o.degree_dist, "Degree distribution JSON");
  sub.add_option("--span-dist", o.span_dist, "Span distribution JSON (seconds)");
  sub.add_option("--max-degree", o.max_degree, "Search bound for the capacity");
  sub.add_option("--max-timeout", o.max_timeout, "Search bound for the timeout (s)");
}

json cmd_estimate(const EstimateOpts& o, Run& run) {
  if (!(o.alpha > 0.0 && o.alpha < 1.0) || !(o.beta > 0.0 && o.beta < 1.0))
    throw ConfigError("alpha and beta must lie in (0, 1)");
  const Distribution degree =
      o.degree_dist.empty() ? Distribution(reference_degree_dist()) : load_dist(o.degree_dist, RepairPolicy::Repair);
  const Distribution span =
      o.span_dist.empty() ? Distribution(reference_span_dist()) : load_dist(o.span_dist, RepairPolicy::Repair);
  json result = {{"capacity", estimate_capacity(degree, o.alpha, o.max_degree)},
                 {"timeout_s", estimate_timeout(span, o.beta, o.max_timeout)}};
  write_json(run.path("params.json"), result);
  run.artifact("params.json");
  return result;
}

// ---- run-pipeline ----

struct PipelineOpts {
  std::string trace;
  std::string pipeline;
  std::string kind;
  std::optional<int> capacity;
  std::optional<int> timeout;
  std::optional<std::size_t> window;
  std::optional<std::size_t> step;
  std::string strategy;
  std::string mode;
  std::optional<std::int64_t> queue_capacity;
};

void add_pipeline_opts(CLI::App& sub, PipelineOpts& o, bool with_kind) {
  sub.add_option("--pipeline", o.pipeline, "Pipeline config JSON");
  if (with_kind) sub.add_option("--kind", o.kind, "Aggregate: swa|sliding")->check(CLI::IsMember({"swa", "sliding"}));
  sub.add_option("--capacity", o.capacity, "SWA window capacity");
  sub.add_option("--timeout", o.timeout, "SWA timeout (s)");
  sub.add_option("--window", o.window, "Sliding window size (tuples)");
  sub.add_option("--step", o.step, "Sliding advance step (tuples)");
  sub.add_option("--strategy", o.strategy, "Association key: head|head_ts|head_ip|head_ts_ip")
      ->check(CLI::IsMember({"head", "head_ts", "head_ip", "head_ts_ip"}));
  sub.add_option("--mode", o.mode, "Replay: event|afap")->check(CLI::IsMember({"event", "afap"}));
  sub.add_option("--queue-capacity", o.queue_capacity, "UNION queue capacity override");
}

PipelineConfig pipeline_config(const PipelineOpts& o) {
  PipelineConfig c = o.pipeline.empty() ? PipelineConfig{} : pipeline_config_from_json(read_json_file(o.pipeline));
  if (!o.kind.empty()) c.aggregate.kind = o.kind == "swa" ? AggregateKind::Swa : AggregateKind::Sliding;
  if (o.capacity) c.aggregate.capacity = *o.capacity;
  if (o.timeout) c.aggregate.timeout_s = *o.timeout;
  if (o.window) c.aggregate.window = *o.window;
  if (o.step) c.aggregate.step = *o.step;
  if (!o.strategy.empty()) c.strategy = parse_strategy(o.strategy);
  if (!o.mode.empty()) c.mode = o.mode == "event" ? ReplayMode::EventTime : ReplayMode::AsFastAsPossible;
  if (o.queue_capacity) c.queue_capacity = *o.queue_capacity;
  if (c.aggregate.capacity < 1 || c.aggregate.timeout_s < 1) throw ConfigError("capacity and timeout must be >= 1");
  if (c.aggregate.window < 1 || c.aggregate.step < 1) throw ConfigError("window and step must be >= 1");
  return c;
}

Trace load_trace(const std::string& path) {
  if (path.empty()) throw ConfigError("--trace is required");
  if (!fs::exists(path)) throw ConfigError("no such trace: " + path);
  return read_trace(fs::path(path));
}

json cmd_run_pipeline(const PipelineOpts& o, Run& run) {
  const auto cfg = pipeline_config(o);
  const auto trace = load_trace(o.trace);
  const auto result = run_pipeline(trace, cfg);
  {
    std::ofstream out(run.path("emitted.csv"), std::ios::binary);
    write_emitted(result.emitted, out);
  }
  {
    std::ofstream out(run.path("members.csv"), std::ios::binary);
    write_members(result.emitted, out);
  }
  run.artifact("emitted.csv");
  run.artifact("members.csv");
  json stats = {{"config", to_json(cfg)},
                {"emitted", result.emitted.size()},
                {"union", summarize(result.union_stats)},
                {"aggregate", summarize(result.aggregate_stats)}};
  write_json(run.path("stats.json"), stats);
  run.artifact("stats.json");
  return stats;
}

// ---- evaluate ----

struct EvaluateOpts {
  std::string emitted;
  std::string members;
  std::string trace;
  std::string gamma = "1,0.85,0.75";
};

void add_evaluate(CLI::App& sub, EvaluateOpts& o) {
  sub.add_option("--emitted", o.emitted, "Emitted instances CSV");
  sub.add_option("--members", o.members, "Members sidecar (default: members.csv beside --emitted)");
  sub.add_option("--trace", o.trace, "Trace with ground truth");
  sub.add_option("--gamma", o.gamma, "Comma-separated completeness thresholds");
}

json cmd_evaluate(const EvaluateOpts& o, Run& run) {
  if (o.emitted.empty()) throw ConfigError("--emitted is required");
  const auto gammas = parse_list(o.gamma);
  const fs::path members = o.members.empty() ? fs::path(o.emitted).parent_path() / "members.csv" : fs::path(o.members);
  std::ifstream em(o.emitted);
  if (!em) throw ConfigError("cannot open " + o.emitted);
  std::ifstream mem(members);
  if (!mem) throw ConfigError("cannot open members sidecar " + members.string());
  const auto emitted = read_emitted(em, &mem);
  const auto trace = load_trace(o.trace);
  const GroundTruth truth(trace);
  const auto report = to_json(evaluate(emitted, truth, gammas));
  write_json(run.path("evaluation.json"), report);
  run.artifact("evaluation.json");
  return report;
}

// ---- predict / simulate-queue ----

struct QueueOpts {
  std::string model;
  bool strict = false;
  std::uint64_t arrivals = 1000000;
};

json cmd_predict(const QueueOpts& o, Run& run) {
  if (o.model.empty()) throw ConfigError("--model is required");
  const auto q = queue_spec_from_json(read_json_file(o.model), o.strict ? std::optional<bool>(true) : std::nullopt);
  json result;
  if (q.servers && *q.servers == 1 && q.capacity) {
    PhQueueModel m{as_phase_type(q.arrival, "arrival"), as_phase_type(q.service, "service"), int(*q.capacity),
                   q.batch_min, q.batch_max};
    const bool batch = q.batch_max > 1;
    const auto sol = batch ? solve_batch_ph_ph_1_n(m) : solve_ph_ph_1_n(m);
    result = to_json(sol.perf);
    result["solver"] = batch ? "ctmc_batch" : "ctmc";
    result["states"] = sol.states;
    result["residual"] = sol.residual;
  } else {
    if (q.batch_max > 1) throw ConfigError("batch service needs one server and a finite capacity");
    if (q.capacity) throw ConfigError("a finite capacity with several servers is only supported by simulate-queue");
    const double lambda = 1.0 / q.arrival.mean();
    const auto perf = solve_ggc_approx(lambda, dist_scv(q.arrival), q.service.mean(), dist_scv(q.service), q.servers);
    result = to_json(perf);
    result["solver"] = "ggc_allen_cunneen";
    if (q.servers) {
      result["servers"] = *q.servers;
      result["utilization"] = lambda * q.service.mean() / double(*q.servers);
    } else {
      result["min_servers"] = min_servers(lambda, 1.0 / q.service.mean());
    }
  }
  result["lambda"] = 1.0 / q.arrival.mean();
  if (!q.repairs.empty()) result["repairs"] = repairs_json(q.repairs);
  write_json(run.path("prediction.json"), result);
  run.artifact("prediction.json");
  return result;
}

json cmd_simulate(const QueueOpts& o, std::uint64_t seed, Run& run) {
  if (o.model.empty()) throw ConfigError("--model is required");
  const auto q = queue_spec_from_json(read_json_file(o.model), o.strict ? std::optional<bool>(true) : std::nullopt);
  SimModel m{q.arrival, q.service, q.servers, q.capacity, q.batch_min, q.batch_max};
  const auto r = des_simulate(m, o.arrivals, seed);
  auto result = to_json(r);
  if (!q.repairs.empty()) result["repairs"] = repairs_json(q.repairs);
  write_json(run.path("simulation.json"), result);
  run.artifact("simulation.json");
  return result;
}

// ---- compare ----

struct CompareOpts {
  std::string trace;
  std::size_t instances = 13997;
  int capacity = 13;
  int timeout = 22;
  std::size_t window = 32000;
  std::size_t step = 32000;
  std::string strategy = "head_ts_ip";
  std::string gamma = "1,0.85,0.75";
};

void add_compare(CLI::App& sub, CompareOpts& o) {
  sub.add_option("--trace", o.trace, "Trace CSV (default: synthesize one from --seed)");
  sub.add_option("--instances", o.instances, "Instances when synthesizing");
  sub.add_option("--capacity", o.capacity, "SWA window capacity");
  sub.add_option("--timeout", o.timeout, "SWA timeout (s)");
  sub.add_option("--window", o.window, "Sliding window size (tuples)");
  sub.add_option("--step", o.step, "Sliding advance step (tuples)");
  sub.add_option("--strategy", o.strategy, "Association key")
      ->check(CLI::IsMember({"head", "head_ts", "head_ip", "head_ts_ip"}));
  sub.add_option("--gamma", o.gamma, "Comma-separated completeness thresholds");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json cmd_compare(const CompareOpts& o, std::uint64_t seed, Run& run) {
  const auto gammas = parse_list(o.gamma);
  Trace trace;
  if (o.trace.empty()) {
    auto w = reference_workload(seed, o.instances);
    trace = generate_trace(w.catalog, w.config);
    write_trace(trace, run.path("trace.csv"));
    run.artifact("trace.csv");
  } else {
    trace = load_trace(o.trace);
  }
  const GroundTruth truth(trace);

  PipelineConfig swa;
  swa.aggregate.kind = AggregateKind::Swa;
  swa.aggregate.capacity = o.capacity;
  swa.aggregate.timeout_s = o.timeout;
  swa.strategy = parse_strategy(o.strategy);
  PipelineConfig sliding = swa;
  sliding.aggregate.kind = AggregateKind::Sliding;
  sliding.aggregate.window = o.window;
  sliding.aggregate.step = o.step;

  const auto rs = run_pipeline(trace, swa);
  const auto rl = run_pipeline(trace, sliding);
  const auto es = evaluate(rs.emitted, truth, gammas);
  const auto el = evaluate(rl.emitted, truth, gammas);
  const auto& as = rs.aggregate_stats;
  const auto& al = rl.aggregate_stats;

  std::vector<std::array<std::string, 3>> rows;
  rows.push_back({"Window Parameters", std::to_string(o.capacity) + "/" + std::to_string(o.capacity) + "/" +
                                           std::to_string(o.timeout),
                  std::to_string(o.window) + "/" + std::to_string(o.step)});
  auto pct = [](double v) { return fmt("%.4f%%", 100.0 * v); };
  for (std::size_t i = 0; i < gammas.size(); ++i)
    rows.push_back({"Integration Completeness(gamma=" + fmt("%g", gammas[i]) + ")", pct(es.completeness[i].second),
                    pct(el.completeness[i].second)});
  rows.push_back({"Integration Completeness(0<gamma<=1) [invocation ratio]", pct(es.capture_rate), pct(el.capture_rate)});
  rows.push_back({"Integration Completeness(0<gamma<=1) [instance ratio]", pct(es.partial_instance_ratio),
                  pct(el.partial_instance_ratio)});
  rows.push_back({"Average Queue Length (L.avg)", fmt("%.0f(window)", as.resident_windows.mean()),
                  fmt("%.0f(tuple)", al.resident_tuples.mean())});
  rows.push_back({"Average Storage (S.avg)", fmt("%.4fMB", as.storage_bytes.mean() / kMebibyte),
                  fmt("%.4fMB", al.storage_bytes.mean() / kMebibyte)});
  rows.push_back({"Max Queue Length (L.max)", fmt("%.0f(window)", as.resident_windows.max),
                  fmt("%.0f(tuple)", al.resident_tuples.max)});
  rows.push_back({"Max Storage (S.max)", fmt("%.4fMB", as.storage_bytes.max / kMebibyte),
                  fmt("%.4fMB", al.storage_bytes.max / kMebibyte)});
  rows.push_back({"Residence Time (W)", fmt("%.4f(S)", as.mean_residence_ms() / 1000.0),
                  fmt("%.4f(S)", al.mean_residence_ms() / 1000.0)});

  json table = json::array();
  std::ostringstream text;
  text << "| Indicators | Small Window Array | Sliding Window |\n|---|---|---|\n";
  for (const auto& r : rows) {
    table.push_back({{"indicator", r[0]}, {"small_window_array", r[1]}, {"sliding_window", r[2]}});
    text << "| " << r[0] << " | " << r[1] << " | " << r[2] << " |\n";
  }
  json result = {{"table", table},
                 {"small_window_array", {{"evaluation", to_json(es)}, {"aggregate", summarize(as)}}},
                 {"sliding_window", {{"evaluation", to_json(el)}, {"aggregate", summarize(al)}}}};
  write_json(run.path("compare.json"), result);
  run.artifact("compare.json");
  write_text(run.path("compare.md"), text.str());
  run.artifact("compare.md");
  return result;
}

/// Expands a flag-keyed JSON config into arguments placed before the user's
/// own, so explicit flags win.
std::vector<std::string> config_args(const fs::path& path, const CLI::App& sub) {
  const auto j = read_json_file(path);
  if (!j.is_object()) throw ConfigError(path.string() + ": config must be a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    const auto* opt = sub.get_option_no_throw("--" + key);
    if (!opt) throw ConfigError(path.string() + ": unknown setting '" + key + "' for " + sub.get_name());
    if (value.is_boolean()) {
      if (opt->get_type_size() != 0) throw ConfigError("setting '" + key + "' is not a flag");
      if (value.get<bool>()) out.push_back("--" + key);
      continue;
    }
    out.push_back("--" + key);
    if (value.is_string()) {
      out.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      out.push_back(joined);
    } else {
      out.push_back(value.dump());
    }
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Service stream integration and operator performance prediction", "streamint"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", STREAMINT_VERSION);

  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 7;
  auto common = [&](CLI::App* sub, bool seeded) {
    sub->add_option("--config", config, "JSON file of settings; flags override it");
    sub->add_option("--out", out_dir, "Output directory");
    if (seeded) sub->add_option("--seed", seed, "Seed for all randomness");
    return sub;
  };

  GenTraceOpts gen;
  FitOpts fit;
  EstimateOpts est;
  PipelineOpts pipe;
  EvaluateOpts eval;
  QueueOpts queue;
  CompareOpts cmp;

  auto* s_gen = common(app.add_subcommand("gen-trace", "Synthesize an invocation trace"), true);
  add_gen_trace(*s_gen, gen);
  auto* s_fit = common(app.add_subcommand("fit-dist", "Fit a Hyper-Erlang distribution by EM"), false);
  add_fit(*s_fit, fit);
  auto* s_est = common(app.add_subcommand("estimate-params", "Choose window capacity and timeout"), false);
  add_estimate(*s_est, est);
  auto* s_run = common(app.add_subcommand("run-pipeline", "Run UNION -> AGGREGATE over a trace"), false);
  s_run->add_option("--trace", pipe.trace, "Trace CSV");
  add_pipeline_opts(*s_run, pipe, true);
  auto* s_eval = common(app.add_subcommand("evaluate", "Score emitted instances against ground truth"), false);
  add_evaluate(*s_eval, eval);
  auto* s_pred = common(app.add_subcommand("predict", "Analytic queue performance"), false);
  s_pred->add_option("--model", queue.model, "Queue model JSON");
  s_pred->add_flag("--strict", queue.strict, "Reject invalid generators instead of repairing");
  auto* s_sim = common(app.add_subcommand("simulate-queue", "Discrete-event queue simulation"), true);
  s_sim->add_option("--model", queue.model, "Queue model JSON");
  s_sim->add_option("--arrivals", queue.arrivals, "Measured arrivals");
  s_sim->add_flag("--strict", queue.strict, "Reject invalid generators instead of repairing");
  auto* s_cmp = common(app.add_subcommand("compare", "Small window array vs sliding window report"), true);
  add_compare(*s_cmp, cmp);

  std::vector<std::string> argv = args;
  try {
    // Splice --config settings in front of the user's flags.
    if (!argv.empty()) {
      CLI::App* sub = nullptr;
      for (auto* s : app.get_subcommands({})) if (s->get_name() == argv[0]) sub = s;
      if (sub) {
        for (std::size_t i = 1; i < argv.size(); ++i) {
          std::string path;
          if (argv[i] == "--config" && i + 1 < argv.size()) path = argv[i + 1];
          else if (argv[i].rfind("--config=", 0) == 0) path = argv[i].substr(9);
          if (path.empty()) continue;
          auto extra = config_args(path, *sub);
          argv.insert(argv.begin() + 1, extra.begin(), extra.end());
          break;
        }
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << STREAMINT_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    Run run(name, out_dir, *sub, args);
    json result;
    if (name == "gen-trace") {
      run.seed(seed);
      result = cmd_gen_trace(gen, seed, run);
    } else if (name == "fit-dist") {
      result = cmd_fit(fit, run);
    } else if (name == "estimate-params") {
      result = cmd_estimate(est, run);
    } else if (name == "run-pipeline") {
      result = cmd_run_pipeline(pipe, run);
    } else if (name == "evaluate") {
      result = cmd_evaluate(eval, run);
    } else if (name == "predict") {
      result = cmd_predict(queue, run);
    } else if (name == "simulate-queue") {
      run.seed(seed);
      result = cmd_simulate(queue, seed, run);
    } else {
      run.seed(seed);
      result = cmd_compare(cmp, seed, run);
    }
    run.write_manifest();
    out << result.dump() << "\n";
    return kExitOk;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    if (const auto* ie = dynamic_cast<const InstabilityError*>(&e))
      err << "suggested servers: " << ie->suggested_servers() << "\n";
    return kExitNumerical;
  } catch (const ParseError& e) {
    err << "parse error at row " << e.row() << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace streamint
