#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "streamint/cli.hpp"

using namespace streamint;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const char* base = std::getenv("STREAMINT_TMP");
  fs::path dir = fs::path(base ? base : fs::temp_directory_path().string()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json read(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

void write(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(); }

}  // namespace

TEST_CASE("estimate-params reproduces 13 and 22 and writes a manifest") {
  const auto dir = scratch("estimate");
  const auto r = run({"estimate-params", "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  const auto p = read(dir / "params.json");
  CHECK(p.at("capacity") == 13);
  CHECK(p.at("timeout_s") == 22);
  const auto m = read(dir / "manifest.json");
  CHECK(m.at("command") == "estimate-params");
  CHECK(m.at("config").at("alpha") == "0.9");
  REQUIRE(m.at("artifacts").size() == 1);
  CHECK(m.at("artifacts")[0].at("sha256") == sha256_file(dir / "params.json"));
  CHECK(m.at("artifacts")[0].at("bytes") == fs::file_size(dir / "params.json"));
  for (const char* k : {"tool", "version", "argv", "wall_time_s"}) CHECK(m.contains(k));
}

TEST_CASE("config file values yield to explicit flags") {
  const auto dir = scratch("config");
  write(dir / "cfg.json", {{"alpha", 0.5}, {"beta", 0.5}});
  REQUIRE(run({"estimate-params", "--config", (dir / "cfg.json").string(), "--out", dir.string()}).code == 0);
  const auto from_file = read(dir / "params.json");
  REQUIRE(run({"estimate-params", "--config", (dir / "cfg.json").string(), "--alpha", "0.9", "--out", dir.string()})
              .code == 0);
  const auto overridden = read(dir / "params.json");
  CHECK(overridden.at("capacity") == 13);
  CHECK(from_file.at("capacity") < 13);
  CHECK(overridden.at("timeout_s") == from_file.at("timeout_s"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"no-such-command"}).code == kExitUsage);
  CHECK(run({"estimate-params", "--alpha"}).code == kExitUsage);
  CHECK(run({"estimate-params", "--alpha", "1.5", "--out", dir.string()}).code == kExitConfig);
  write(dir / "bad.json", {{"no_such_key", 1}});
  CHECK(run({"estimate-params", "--config", (dir / "bad.json").string()}).code == kExitConfig);
  CHECK(run({"evaluate", "--emitted", (dir / "missing.csv").string(), "--trace", (dir / "missing.csv").string(),
             "--out", dir.string()})
            .code == kExitConfig);

  write(dir / "unstable.json", {{"arrival", {{"mean", 1.0}, {"scv", 1.0}}},
                                {"service", {{"mean", 3.5}, {"scv", 1.0}}},
                                {"servers", 2},
                                {"capacity", "unbounded"}});
  const auto r = run({"predict", "--model", (dir / "unstable.json").string(), "--out", dir.string()});
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("suggested servers: 4") != std::string::npos);
}

TEST_CASE("predict picks the CTMC for one server and a finite buffer") {
  const auto dir = scratch("predict");
  write(dir / "mm1.json", {{"arrival", {{"type", "erlang"}, {"lambda", 1.0}, {"k", 1}}},
                           {"service", {{"type", "erlang"}, {"lambda", 2.0}, {"k", 1}}},
                           {"capacity", 10}});
  REQUIRE(run({"predict", "--model", (dir / "mm1.json").string(), "--out", dir.string()}).code == 0);
  const auto p = read(dir / "prediction.json");
  CHECK(p.at("solver") == "ctmc");
  for (const char* k : {"L", "Lq", "W", "Wq", "Pbusy", "Ploss", "states", "residual"}) CHECK(p.contains(k));
  CHECK(p.at("states") == 11);
}

TEST_CASE("strict mode rejects an invalid generator that repair mode fixes") {
  const auto dir = scratch("strict");
  const json ph = {{"type", "ph"}, {"alpha", {1.0, 0.0}}, {"T", {{-2.0, -0.5}, {0.0, -3.0}}}};
  write(dir / "m.json", {{"arrival", {{"type", "erlang"}, {"lambda", 0.5}, {"k", 1}}}, {"service", ph}, {"capacity", 5}});
  CHECK(run({"predict", "--model", (dir / "m.json").string(), "--strict", "--out", dir.string()}).code == kExitConfig);
  REQUIRE(run({"predict", "--model", (dir / "m.json").string(), "--out", dir.string()}).code == 0);
  CHECK(read(dir / "prediction.json").at("repairs").size() >= 1);
}

TEST_CASE("simulate-queue output") {
  const auto dir = scratch("simulate");
  write(dir / "m.json", {{"arrival", {{"mean", 1.0}, {"scv", 1.0}}}, {"service", {{"mean", 0.5}, {"scv", 1.0}}}});
  REQUIRE(run({"simulate-queue", "--model", (dir / "m.json").string(), "--arrivals", "20000", "--out", dir.string()})
              .code == 0);
  const auto s = read(dir / "simulation.json");
  for (const char* k : {"L", "W", "Ploss", "ci95_half_width", "arrivals", "batches"}) CHECK(s.contains(k));
  CHECK(read(dir / "manifest.json").at("seed") == 7);
}

TEST_CASE("trace, pipeline and evaluation chain") {
  const auto dir = scratch("chain");
  REQUIRE(run({"gen-trace", "--instances", "300", "--services", "200", "--users", "50", "--seed", "4", "--out",
               dir.string()})
              .code == 0);
  REQUIRE(fs::exists(dir / "trace.csv"));
  REQUIRE(run({"run-pipeline", "--trace", (dir / "trace.csv").string(), "--kind", "swa", "--out", dir.string()})
              .code == 0);
  REQUIRE(run({"evaluate", "--emitted", (dir / "emitted.csv").string(), "--trace", (dir / "trace.csv").string(),
               "--out", dir.string()})
              .code == 0);
  const auto e = read(dir / "evaluation.json");
  CHECK(e.at("rows").contains("Recall"));
  REQUIRE(run({"fit-dist", "--trace", (dir / "trace.csv").string(), "--quantity", "degree", "--branches", "1",
               "--emit-curves", "--out", dir.string()})
              .code == 0);
  CHECK(fs::exists(dir / "curves.csv"));
}
