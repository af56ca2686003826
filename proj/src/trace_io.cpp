#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "streamint/errors.hpp"
#include "streamint/trace.hpp"

namespace streamint {

namespace {

void check_field(const std::string& s) {
  if (s.find_first_of(",\r\n") != std::string::npos) throw InvalidInput("trace field contains a delimiter: " + s);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_int(std::string_view field, const char* name, std::size_t row) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(std::string("bad ") + name + " '" + std::string(field) + "'", row);
  return value;
}

}  // namespace

void write_trace(const Trace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    check_field(r.user_id);
    check_field(r.service_id);
    check_field(r.head_id);
    out << r.timestamp_ms << ',' << r.user_id << ',' << r.service_id << ',' << r.head_id << ',' << r.instance_ts_s
        << ',' << r.response_ms << ',' << r.truth_instance << ',' << r.partition << '\n';
  }
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write trace " + path.string());
  write_trace(trace, out);
}

Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError("unexpected header '" + line + "'", 0);

  Trace trace;
  int max_partition = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError("empty row", row);
    const auto f = split(line);
    if (f.size() != 8) throw ParseError("expected 8 columns, found " + std::to_string(f.size()), row);
    InvocationTuple t;
    t.timestamp_ms = parse_int<std::int64_t>(f[0], "timestamp_ms", row);
    t.user_id = f[1];
    t.service_id = f[2];
    t.head_id = f[3];
    t.instance_ts_s = parse_int<std::int64_t>(f[4], "instance_ts_s", row);
    t.response_ms = parse_int<std::int64_t>(f[5], "response_ms", row);
    t.truth_instance = parse_int<InstanceId>(f[6], "truth_instance", row);
    t.partition = parse_int<int>(f[7], "partition", row);
    if (t.partition < 0) throw ParseError("negative partition", row);
    if (t.response_ms < 0) throw ParseError("negative response_ms", row);
    max_partition = std::max(max_partition, t.partition);
    trace.rows.push_back(std::move(t));
  }
  trace.partitions = max_partition + 1;
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trace " + path.string());
  return read_trace(in);
}

}  // namespace streamint
