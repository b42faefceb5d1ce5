#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pipesim/domain.hpp"
#include "pipesim/trace/sink.hpp"

namespace pipesim::trace {

/// Log-bucketed quantile sketch with 1% relative bucket width. Memory grows
/// with the dynamic range of the data, not with the number of values.
class QuantileSketch {
public:
  static constexpr double kGamma = 1.01;
  static constexpr double kTiny = 1e-9;

  void add(double x) {
    ++count_;
    if (!(x > kTiny)) {
      ++zeros_;
      return;
    }
    const auto idx = static_cast<int>(std::ceil(std::log(x) / log_gamma()));
    if (buckets_.empty()) {
      offset_ = idx;
      buckets_.push_back(0);
    } else if (idx < offset_) {
      buckets_.insert(buckets_.begin(), static_cast<std::size_t>(offset_ - idx), 0);
      offset_ = idx;
    } else if (idx - offset_ >= static_cast<int>(buckets_.size())) {
      buckets_.resize(static_cast<std::size_t>(idx - offset_ + 1), 0);
    }
    ++buckets_[static_cast<std::size_t>(idx - offset_)];
  }

  std::uint64_t count() const { return count_; }

  /// Value at probability q; the representative point of each bucket is its
  /// harmonic centre, so the relative error stays below half a percent.
  double quantile(double q) const {
    if (count_ == 0) return 0.0;
    q = std::clamp(q, 0.0, 1.0);
    const auto rank = static_cast<std::uint64_t>(std::floor(q * static_cast<double>(count_ - 1)));
    if (rank < zeros_) return 0.0;
    std::uint64_t seen = zeros_;
    for (std::size_t i = 0; i < buckets_.size(); ++i) {
      seen += buckets_[i];
      if (seen > rank) {
        const double upper = std::exp(static_cast<double>(offset_ + static_cast<int>(i)) * log_gamma());
        return 2.0 * upper / (kGamma + 1.0);
      }
    }
    return std::exp(static_cast<double>(offset_ + static_cast<int>(buckets_.size()) - 1) * log_gamma());
  }

  std::size_t bucket_count() const { return buckets_.size(); }

private:
  static double log_gamma() {
    static const double v = std::log(kGamma);
    return v;
  }

  std::uint64_t count_ = 0;
  std::uint64_t zeros_ = 0;
  int offset_ = 0;
  std::vector<std::uint64_t> buckets_;
};

struct DurationStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

class DurationAccumulator {
public:
  void add(double seconds) {
    ++n_;
    sum_ += seconds;
    max_ = std::max(max_, seconds);
    sketch_.add(seconds);
  }
  DurationStats stats() const {
    DurationStats s;
    s.count = n_;
    if (n_ == 0) return s;
    s.mean = sum_ / static_cast<double>(n_);
    s.p50 = sketch_.quantile(0.5);
    s.p95 = sketch_.quantile(0.95);
    s.max = max_;
    return s;
  }

private:
  std::uint64_t n_ = 0;
  double sum_ = 0.0;
  double max_ = 0.0;
  QuantileSketch sketch_;
};

struct PipelineCounts {
  std::uint64_t arrived = 0;
  std::uint64_t completed = 0;
  std::uint64_t gate_failed = 0;
  std::uint64_t truncated = 0;
  std::uint64_t in_queue = 0; ///< waiting on a resource request at the horizon
};

struct ResourceUsage {
  std::string name;
  ResourceKind kind = ResourceKind::compute;
  std::uint32_t capacity = 0;
  double busy_slot_seconds = 0.0;
  double utilization = 0.0;
  std::uint32_t peak_in_service = 0;
  std::uint64_t grants = 0;
  DurationStats wait;
  double mean_queue_length = std::numeric_limits<double>::quiet_NaN(); ///< filled by the engine
};

struct RunSummary {
  std::string run_id;
  std::uint64_t seed = 0;
  double horizon_s = 0.0;
  std::uint64_t records = 0;
  PipelineCounts pipelines;
  std::array<DurationStats, 6> task_duration{}; ///< indexed by TaskType
  std::array<DurationStats, 6> exec_duration{};
  DurationStats wait;
  std::vector<ResourceUsage> resources;
  double bytes_raw = 0.0;
  double bytes_transferred = 0.0; ///< includes the network overhead factor
  double mean_potential = std::numeric_limits<double>::quiet_NaN(); ///< filled by the engine

  const ResourceUsage* resource(std::string_view name) const {
    for (const auto& r : resources)
      if (r.name == name) return &r;
    return nullptr;
  }

  std::string to_text() const {
    std::ostringstream o;
    o.precision(6);
    o << "run " << run_id << " seed " << seed << " horizon_s " << horizon_s << " records " << records << '\n';
    o << "pipelines arrived " << pipelines.arrived << " completed " << pipelines.completed << " gate_failed "
      << pipelines.gate_failed << " truncated " << pipelines.truncated << " in_queue " << pipelines.in_queue << '\n';
    o << "task               count        mean         p50         p95         max\n";
    auto row = [&](std::string_view label, const DurationStats& s) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-14s %9llu %11.3f %11.3f %11.3f %11.3f\n", std::string(label).c_str(),
                    static_cast<unsigned long long>(s.count), s.mean, s.p50, s.p95, s.max);
      o << buf;
    };
    for (auto t : kTaskTypes)
      if (task_duration[static_cast<std::size_t>(t)].count) row(to_string(t), task_duration[static_cast<std::size_t>(t)]);
    row("wait", wait);
    o << "resource        kind       cap  utilization   grants   mean_wait    p95_wait\n";
    for (const auto& r : resources) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "%-14s %-10s %4u %12.4f %8llu %11.3f %11.3f\n", r.name.c_str(),
                    std::string(to_string(r.kind)).c_str(), r.capacity, r.utilization,
                    static_cast<unsigned long long>(r.grants), r.wait.mean, r.wait.p95);
      o << buf;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "bytes transferred %.0f (raw %.0f)\n", bytes_transferred, bytes_raw);
    o << buf;
    if (!std::isnan(mean_potential)) {
      std::snprintf(buf, sizeof buf, "mean potential improvement %.6f\n", mean_potential);
      o << buf;
    }
    return o.str();
  }
};

/// One-pass summary of a trace. Memory is bounded by the number of tasks in
/// flight at any instant, independent of trace length.
///
/// A task opens with its first record and closes on the rel that frees its
/// last held resource, on a write while it holds nothing, or on a record
/// whose status is not ok.
class Summarizer final : public TraceSink {
public:
  void begin(const TraceHeader& h) override {
    header_ = h;
    for (const auto& r : h.resources) resource_index(r.name, r.kind, r.capacity);
  }

  void append(const TraceRecord& r) override {
    ++records_;
    last_time_ = std::max(last_time_, r.t_end);
    const std::uint64_t key = task_key(r.pipeline_id, r.task_id);
    auto it = open_.find(key);
    if (it == open_.end()) {
      if (r.task_id == 0) ++counts_.arrived;
      it = open_.emplace(key, OpenTask{r.task_type, SimTime{}, {}}).first;
    }
    auto& task = it->second;
    task.elapsed += r.duration();
    if (r.bytes) bytes_ += static_cast<double>(*r.bytes);
    const auto type = static_cast<std::size_t>(r.task_type);

    int res = -1;
    if (r.resource && (r.op == SysOpKind::req || r.op == SysOpKind::rel || r.op == SysOpKind::exec))
      res = resource_index(*r.resource, ResourceKind::compute, 0);

    bool close = false;
    if (r.status == OpStatus::truncated) {
      if (r.op == SysOpKind::req) ++counts_.in_queue;
      else ++counts_.truncated;
      for (const auto& [idx, granted] : task.held) release(idx, granted, r.t_end);
      task.held.clear();
      open_.erase(it);
      return;
    }
    switch (r.op) {
    case SysOpKind::req:
      if (res >= 0) {
        const double w = r.duration().seconds();
        wait_.add(w);
        usage_[static_cast<std::size_t>(res)].wait.add(w);
        auto& u = usage_[static_cast<std::size_t>(res)];
        ++u.grants;
        u.peak = std::max(u.peak, ++u.in_service);
        task.held.emplace_back(res, r.t_end);
      }
      break;
    case SysOpKind::rel:
      if (res >= 0) {
        const auto h = std::find_if(task.held.begin(), task.held.end(), [res](const auto& p) { return p.first == res; });
        if (h == task.held.end()) throw MalformedTrace("rel of resource " + *r.resource + " that was never granted");
        release(res, h->second, r.t_start);
        task.held.erase(h);
      }
      close = task.held.empty();
      break;
    case SysOpKind::write:
      close = task.held.empty();
      break;
    case SysOpKind::exec:
      exec_[type].add(r.duration().seconds());
      break;
    case SysOpKind::read:
      break;
    }
    if (r.status == OpStatus::gate_failed) {
      ++counts_.gate_failed;
      close = true;
    }
    if (close) {
      task_[type].add(task.elapsed.seconds());
      open_.erase(it);
    }
  }

  RunSummary summary() const {
    RunSummary s;
    s.run_id = header_.run_id;
    s.seed = header_.seed;
    const SimTime horizon = header_.horizon.value_or(last_time_);
    s.horizon_s = horizon.seconds();
    s.records = records_;
    s.pipelines = counts_;
    s.pipelines.completed = counts_.arrived - counts_.gate_failed - counts_.truncated - counts_.in_queue;
    for (std::size_t t = 0; t < 6; ++t) {
      s.task_duration[t] = task_[t].stats();
      s.exec_duration[t] = exec_[t].stats();
    }
    s.wait = wait_.stats();
    for (const auto& u : usage_) {
      ResourceUsage r;
      r.name = u.name;
      r.kind = u.kind;
      r.capacity = u.capacity;
      std::int64_t busy = u.busy_us;
      // Slots still held when the stream ends count up to the horizon.
      for (const auto& [key, task] : open_)
        for (const auto& [idx, granted] : task.held)
          if (&usage_[static_cast<std::size_t>(idx)] == &u && horizon > granted) busy += (horizon - granted).micros();
      r.busy_slot_seconds = static_cast<double>(busy) / 1e6;
      const double slots = u.capacity > 0 ? u.capacity : u.peak;
      if (slots > 0 && horizon.micros() > 0) r.utilization = r.busy_slot_seconds / (slots * horizon.seconds());
      r.peak_in_service = u.peak;
      r.grants = u.grants;
      r.wait = u.wait.stats();
      s.resources.push_back(std::move(r));
    }
    s.bytes_raw = bytes_;
    s.bytes_transferred = bytes_ * header_.overhead;
    return s;
  }

  const TraceHeader& header() const { return header_; }
  std::size_t open_tasks() const { return open_.size(); }

private:
  struct OpenTask {
    TaskType type;
    SimTime elapsed{};
    std::vector<std::pair<int, SimTime>> held;
  };
  struct Usage {
    std::string name;
    ResourceKind kind = ResourceKind::compute;
    std::uint32_t capacity = 0;
    std::int64_t busy_us = 0;
    std::uint64_t grants = 0;
    std::uint32_t in_service = 0;
    std::uint32_t peak = 0;
    DurationAccumulator wait;
  };

  static std::uint64_t task_key(std::uint64_t pipeline, std::uint32_t task) {
    if (task >= (1u << 12) || pipeline >= (std::uint64_t{1} << 52)) throw MalformedTrace("pipeline or task id out of range");
    return (pipeline << 12) | task;
  }

  int resource_index(const std::string& name, ResourceKind kind, std::uint32_t cap) {
    for (std::size_t i = 0; i < usage_.size(); ++i)
      if (usage_[i].name == name) return static_cast<int>(i);
    Usage u;
    u.name = name;
    u.kind = kind;
    u.capacity = cap;
    usage_.push_back(std::move(u));
    return static_cast<int>(usage_.size() - 1);
  }

  void release(int idx, SimTime granted, SimTime at) {
    auto& u = usage_[static_cast<std::size_t>(idx)];
    if (at > granted) u.busy_us += (at - granted).micros();
    if (u.in_service > 0) --u.in_service;
  }

  TraceHeader header_;
  std::uint64_t records_ = 0;
  SimTime last_time_{};
  PipelineCounts counts_;
  std::array<DurationAccumulator, 6> task_{};
  std::array<DurationAccumulator, 6> exec_{};
  DurationAccumulator wait_;
  std::vector<Usage> usage_;
  std::unordered_map<std::uint64_t, OpenTask> open_;
  double bytes_ = 0.0;
};

inline RunSummary summarize(std::istream& in) {
  Summarizer s;
  read_trace(in, s);
  return s.summary();
}

inline RunSummary summarize_file(const std::string& path) {
  Summarizer s;
  read_trace_file(path, s);
  return s.summary();
}

} // namespace pipesim::trace
