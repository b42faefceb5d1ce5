#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pipesim/domain.hpp"
#include "pipesim/error.hpp"
#include "pipesim/sim_time.hpp"
#include "pipesim/text.hpp"

namespace pipesim::trace {

enum class OpStatus : std::uint8_t { ok, gate_failed, truncated };

inline std::string_view to_string(OpStatus s) {
  constexpr std::array<std::string_view, 3> names{"ok", "gate_failed", "truncated"};
  return names[static_cast<std::size_t>(s)];
}

inline std::optional<OpStatus> parse_status(std::string_view s) {
  return pipesim::detail::parse_enum(s, std::array{OpStatus::ok, OpStatus::gate_failed, OpStatus::truncated});
}

/// One executed system operation. Records are emitted when the operation
/// completes, so a stream is ordered by t_end.
struct TraceRecord {
  std::string run_id;
  std::uint64_t pipeline_id = 0;
  std::uint32_t task_id = 0;
  TaskType task_type = TaskType::preprocess;
  SysOpKind op = SysOpKind::exec;
  std::optional<std::string> resource;
  SimTime t_start;
  SimTime t_end;
  std::optional<std::uint64_t> bytes;
  OpStatus status = OpStatus::ok;

  SimTime duration() const { return t_end - t_start; }
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

inline bool carries_bytes(SysOpKind op) { return op == SysOpKind::read || op == SysOpKind::write; }

/// Throws InvalidRecord when the record breaks a field invariant.
inline void validate_record(const TraceRecord& r) {
  if (r.t_end < r.t_start) throw InvalidRecord("record ends before it starts");
  if (r.t_start < SimTime{}) throw InvalidRecord("negative start time");
  if (r.bytes.has_value() != carries_bytes(r.op))
    throw InvalidRecord(std::string("bytes must be present exactly for read/write ops, op is ") +
                        std::string(to_string(r.op)));
  if (!text::is_identifier(r.run_id)) throw InvalidRecord("run id '" + r.run_id + "' is not a plain identifier");
  if (r.resource && !text::is_identifier(*r.resource))
    throw InvalidRecord("resource '" + *r.resource + "' is not a plain identifier");
}

namespace detail {

inline void append_uint(std::string& out, std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void append_time(std::string& out, SimTime t) {
  const auto us = t.micros();
  append_uint(out, static_cast<std::uint64_t>(us / 1000000));
  char frac[7];
  auto rem = static_cast<unsigned>(us % 1000000);
  for (int i = 5; i >= 0; --i) {
    frac[i] = static_cast<char>('0' + rem % 10);
    rem /= 10;
  }
  out.push_back('.');
  out.append(frac, 6);
}

inline void append_quoted(std::string& out, std::string_view s) {
  out.push_back('"');
  out.append(s);
  out.push_back('"');
}

} // namespace detail

/// Appends one JSON line (with trailing newline). Identifiers are validated
/// beforehand, so no escaping is needed.
inline void append_record(std::string& out, const TraceRecord& r) {
  out += "{\"run\":";
  detail::append_quoted(out, r.run_id);
  out += ",\"pipeline\":";
  detail::append_uint(out, r.pipeline_id);
  out += ",\"task\":";
  detail::append_uint(out, r.task_id);
  out += ",\"type\":";
  detail::append_quoted(out, to_string(r.task_type));
  out += ",\"op\":";
  detail::append_quoted(out, to_string(r.op));
  out += ",\"resource\":";
  if (r.resource) detail::append_quoted(out, *r.resource);
  else out += "null";
  out += ",\"t_start\":";
  detail::append_time(out, r.t_start);
  out += ",\"t_end\":";
  detail::append_time(out, r.t_end);
  out += ",\"bytes\":";
  if (r.bytes) detail::append_uint(out, *r.bytes);
  else out += "null";
  out += ",\"status\":";
  detail::append_quoted(out, to_string(r.status));
  out += "}\n";
}

inline std::string format_record(const TraceRecord& r) {
  std::string s;
  s.reserve(192);
  append_record(s, r);
  s.pop_back();
  return s;
}

namespace detail {

inline SimTime json_time(const nlohmann::json& v, const char* key) {
  if (!v.is_number()) throw MalformedTrace(std::string("field ") + key + " is not a number");
  const double s = v.get<double>();
  if (!(s >= 0)) throw MalformedTrace(std::string("field ") + key + " is negative");
  return SimTime::from_seconds(s);
}

template <typename E, typename F>
E json_enum(const nlohmann::json& v, const char* key, F parse) {
  if (!v.is_string()) throw MalformedTrace(std::string("field ") + key + " is not a string");
  const auto e = parse(v.get_ref<const std::string&>());
  if (!e) throw MalformedTrace(std::string("field ") + key + " has unknown value '" + v.get<std::string>() + "'");
  return *e;
}

} // namespace detail

/// Parses one trace line; throws MalformedTrace on syntax or schema errors.
inline TraceRecord parse_record(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw MalformedTrace("trace line is not a JSON object");
  auto field = [&](const char* key) -> const nlohmann::json& {
    const auto it = j.find(key);
    if (it == j.end()) throw MalformedTrace(std::string("trace line lacks field ") + key);
    return *it;
  };
  TraceRecord r;
  const auto& run = field("run");
  if (!run.is_string()) throw MalformedTrace("field run is not a string");
  r.run_id = run.get<std::string>();
  const auto& pipeline = field("pipeline");
  const auto& task = field("task");
  if (!pipeline.is_number_unsigned() || !task.is_number_unsigned())
    throw MalformedTrace("pipeline and task must be non-negative integers");
  r.pipeline_id = pipeline.get<std::uint64_t>();
  r.task_id = task.get<std::uint32_t>();
  r.task_type = detail::json_enum<TaskType>(field("type"), "type", parse_task_type);
  r.op = detail::json_enum<SysOpKind>(field("op"), "op", parse_sysop);
  if (const auto& res = field("resource"); !res.is_null()) {
    if (!res.is_string()) throw MalformedTrace("field resource is not a string");
    r.resource = res.get<std::string>();
  }
  r.t_start = detail::json_time(field("t_start"), "t_start");
  r.t_end = detail::json_time(field("t_end"), "t_end");
  if (const auto& b = field("bytes"); !b.is_null()) {
    if (!b.is_number_unsigned()) throw MalformedTrace("field bytes is not a non-negative integer");
    r.bytes = b.get<std::uint64_t>();
  }
  r.status = detail::json_enum<OpStatus>(field("status"), "status", parse_status);
  try {
    validate_record(r);
  } catch (const InvalidRecord& e) {
    throw MalformedTrace(e.what());
  }
  return r;
}

// ---------------------------------------------------------------- header

struct ResourceInfo {
  std::string name;
  ResourceKind kind = ResourceKind::compute;
  std::uint32_t capacity = 0; ///< 0 when unknown
  friend bool operator==(const ResourceInfo&, const ResourceInfo&) = default;
};

/// First line of every trace file. Only run and seed are mandatory; the
/// remaining tokens let analytics run from the trace alone.
struct TraceHeader {
  std::string run_id = "run";
  std::uint64_t seed = 0;
  std::optional<SimTime> horizon;
  double epoch = 1704067200.0;
  std::int64_t tz_offset_s = 0;
  double overhead = 1.05;
  std::vector<ResourceInfo> resources;

  const ResourceInfo* find(std::string_view name) const {
    for (const auto& r : resources)
      if (r.name == name) return &r;
    return nullptr;
  }
  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

inline constexpr std::string_view kTraceMagic = "pipesim-trace";
inline constexpr std::string_view kTraceVersion = "v1";

inline std::string format_header(const TraceHeader& h) {
  if (!text::is_identifier(h.run_id)) throw InvalidArgument("run id '" + h.run_id + "' is not a plain identifier");
  std::string s{kTraceMagic};
  s += ' ';
  s += kTraceVersion;
  s += " run=" + h.run_id + " seed=" + std::to_string(h.seed);
  if (h.horizon) {
    s += " horizon=";
    detail::append_time(s, *h.horizon);
  }
  s += " epoch=" + text::format_real(h.epoch);
  s += " tz=" + std::to_string(h.tz_offset_s);
  s += " overhead=" + text::format_real(h.overhead);
  if (!h.resources.empty()) {
    s += " resources=";
    for (std::size_t i = 0; i < h.resources.size(); ++i) {
      const auto& r = h.resources[i];
      if (i) s += ',';
      s += r.name + ':' + std::string(to_string(r.kind)) + ':' + std::to_string(r.capacity);
    }
  }
  return s;
}

inline TraceHeader parse_header(std::string_view line) {
  const auto tokens = text::split(text::trim(line), ' ');
  if (tokens.size() < 2 || tokens[0] != kTraceMagic) throw MalformedTrace("missing pipesim-trace header");
  if (tokens[1] != kTraceVersion)
    throw FormatVersionMismatch("trace version " + std::string(tokens[1]) + ", expected " + std::string(kTraceVersion));
  TraceHeader h;
  bool have_run = false, have_seed = false;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const auto tok = tokens[i];
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw MalformedTrace("header token without '=': " + std::string(tok));
    const auto key = tok.substr(0, eq), value = tok.substr(eq + 1);
    auto bad = [&] { return MalformedTrace("bad header value for " + std::string(key) + ": " + std::string(value)); };
    if (key == "run") {
      if (!text::is_identifier(value)) throw bad();
      h.run_id = std::string(value);
      have_run = true;
    } else if (key == "seed") {
      const auto v = text::parse_uint(value);
      if (!v) throw bad();
      h.seed = *v;
      have_seed = true;
    } else if (key == "horizon") {
      const auto v = text::parse_double(value);
      if (!v || *v < 0) throw bad();
      h.horizon = SimTime::from_seconds(*v);
    } else if (key == "epoch") {
      const auto v = text::parse_double(value);
      if (!v) throw bad();
      h.epoch = *v;
    } else if (key == "tz") {
      const auto v = text::parse_int(value);
      if (!v) throw bad();
      h.tz_offset_s = *v;
    } else if (key == "overhead") {
      const auto v = text::parse_double(value);
      if (!v || *v <= 0) throw bad();
      h.overhead = *v;
    } else if (key == "resources") {
      for (auto spec : text::split(value, ',')) {
        const auto parts = text::split(spec, ':');
        if (parts.size() != 3) throw bad();
        ResourceInfo r;
        r.name = std::string(parts[0]);
        const auto kind = parse_resource_kind(parts[1]);
        const auto cap = text::parse_uint(parts[2]);
        if (!text::is_identifier(r.name) || !kind || !cap) throw bad();
        r.kind = *kind;
        r.capacity = static_cast<std::uint32_t>(*cap);
        h.resources.push_back(std::move(r));
      }
    }
    // Unknown tokens are ignored so later writers can add fields.
  }
  if (!have_run || !have_seed) throw MalformedTrace("trace header lacks run= or seed=");
  return h;
}

} // namespace pipesim::trace
