#pragma once

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <string>
#include <vector>

#include "pipesim/error.hpp"
#include "pipesim/trace/record.hpp"

namespace pipesim::trace {

/// Consumer of a run's records. begin() is called once before the first
/// record and finish() once after the last.
class TraceSink {
public:
  virtual ~TraceSink() = default;
  virtual void begin(const TraceHeader&) {}
  virtual void append(const TraceRecord& record) = 0;
  virtual void finish() {}
};

class NullSink final : public TraceSink {
public:
  void append(const TraceRecord&) override {}
};

/// Keeps everything in memory; meant for tests and small runs.
class MemorySink final : public TraceSink {
public:
  void begin(const TraceHeader& h) override { header = h; }
  void append(const TraceRecord& r) override { records.push_back(r); }

  TraceHeader header;
  std::vector<TraceRecord> records;
};

/// Forwards every call to each attached sink in order.
class TeeSink final : public TraceSink {
public:
  TeeSink() = default;
  explicit TeeSink(std::vector<TraceSink*> sinks) : sinks_{std::move(sinks)} {}

  void add(TraceSink& s) { sinks_.push_back(&s); }
  void begin(const TraceHeader& h) override {
    for (auto* s : sinks_) s->begin(h);
  }
  void append(const TraceRecord& r) override {
    for (auto* s : sinks_) s->append(r);
  }
  void finish() override {
    for (auto* s : sinks_) s->finish();
  }

private:
  std::vector<TraceSink*> sinks_;
};

/// Writes the header line and one JSON line per record, buffered.
class NdjsonWriter final : public TraceSink {
public:
  explicit NdjsonWriter(std::string path, std::size_t buffer_bytes = 1 << 20)
      : path_{std::move(path)}, limit_{buffer_bytes} {
    file_ = std::fopen(path_.c_str(), "wb");
    if (!file_) throw IoFailure("cannot open trace file " + path_ + ": " + std::strerror(errno));
    buf_.reserve(limit_ + 512);
  }
  NdjsonWriter(const NdjsonWriter&) = delete;
  NdjsonWriter& operator=(const NdjsonWriter&) = delete;
  ~NdjsonWriter() override {
    if (file_) {
      try {
        flush();
      } catch (...) {
      }
      std::fclose(file_);
    }
  }

  void begin(const TraceHeader& h) override {
    buf_ += format_header(h);
    buf_.push_back('\n');
  }

  void append(const TraceRecord& r) override {
    validate_record(r);
    append_record(buf_, r);
    ++lines_;
    if (buf_.size() >= limit_) flush();
  }

  void finish() override {
    flush();
    if (std::fflush(file_) != 0) throw IoFailure("cannot flush " + path_);
  }

  std::uint64_t records_written() const { return lines_; }
  const std::string& path() const { return path_; }

private:
  void flush() {
    if (buf_.empty()) return;
    if (std::fwrite(buf_.data(), 1, buf_.size(), file_) != buf_.size())
      throw IoFailure("write to " + path_ + " failed: " + std::strerror(errno));
    buf_.clear();
  }

  std::string path_;
  std::size_t limit_;
  std::FILE* file_ = nullptr;
  std::string buf_;
  std::uint64_t lines_ = 0;
};

/// Streams a trace: header first, then records in file order. Errors carry
/// the one-based line number.
inline TraceHeader read_trace(std::istream& in, TraceSink& sink) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedTrace("empty trace: missing header line");
  TraceHeader header;
  try {
    header = parse_header(line);
  } catch (const MalformedTrace& e) {
    throw MalformedTrace(std::string("line 1: ") + e.what());
  }
  sink.begin(header);
  std::uint64_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      sink.append(parse_record(line));
    } catch (const MalformedTrace& e) {
      throw MalformedTrace("line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (in.bad()) throw IoFailure("read error in trace");
  sink.finish();
  return header;
}

inline TraceHeader read_trace_file(const std::string& path, TraceSink& sink) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open trace file " + path);
  return read_trace(in, sink);
}

} // namespace pipesim::trace
