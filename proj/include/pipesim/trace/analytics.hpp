#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pipesim/error.hpp"
#include "pipesim/stats/arrival.hpp"
#include "pipesim/stats/quantile.hpp"
#include "pipesim/trace/sink.hpp"

namespace pipesim::trace {

/// Follows task boundaries and resource holds through a record stream using
/// the same open/close rules as the Summarizer.
class TaskTracker {
public:
  struct Step {
    bool opened = false;
    bool closed = false;
  };

  /// on_grant(resource, time) and on_release(resource, time) fire as slots
  /// change hands; truncation releases every slot the task still holds.
  template <typename OnGrant, typename OnRelease>
  Step step(const TraceRecord& r, OnGrant&& on_grant, OnRelease&& on_release) {
    Step s;
    const std::uint64_t key = (r.pipeline_id << 12) | (r.task_id & 0xfff);
    auto it = open_.find(key);
    if (it == open_.end()) {
      s.opened = true;
      it = open_.emplace(key, std::vector<std::pair<std::string, SimTime>>{}).first;
    }
    auto& held = it->second;
    if (r.status == OpStatus::truncated) {
      for (const auto& [name, granted] : held) on_release(name, r.t_end);
      open_.erase(it);
      s.closed = true;
      return s;
    }
    if (r.op == SysOpKind::req && r.resource) {
      held.emplace_back(*r.resource, r.t_end);
      on_grant(*r.resource, r.t_end);
    } else if (r.op == SysOpKind::rel && r.resource) {
      const auto h = std::find_if(held.begin(), held.end(), [&](const auto& p) { return p.first == *r.resource; });
      if (h == held.end()) throw MalformedTrace("rel of resource " + *r.resource + " that was never granted");
      on_release(*r.resource, r.t_start);
      held.erase(h);
      s.closed = held.empty();
    } else if (r.op == SysOpKind::write) {
      s.closed = held.empty();
    }
    if (r.status == OpStatus::gate_failed) s.closed = true;
    if (s.closed) open_.erase(it);
    return s;
  }

  std::size_t open() const { return open_.size(); }

private:
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::string, SimTime>>> open_;
};

// ---------------------------------------------------------------- invariants

/// Trace-only checks of capacity safety and FIFO grant order.
class InvariantChecker final : public TraceSink {
public:
  struct Violation {
    std::string resource;
    SimTime at;
    std::string what;
  };

  void begin(const TraceHeader& h) override {
    for (const auto& r : h.resources) state_[r.name].capacity = r.capacity;
  }

  void append(const TraceRecord& r) override {
    if (r.op == SysOpKind::req && r.resource) {
      auto& st = state_[*r.resource];
      // Grants are emitted in grant order, so request times must not decrease.
      if (st.any_grant && r.t_start < st.last_request) {
        ++fifo_count_;
        add(*r.resource, r.t_end, "grant out of request order");
      }
      if (r.status == OpStatus::ok) {
        st.last_request = r.t_start;
        st.any_grant = true;
      }
    }
    tracker_.step(
        r,
        [&](const std::string& name, SimTime t) {
          auto& st = state_[name];
          ++st.in_service;
          if (st.capacity > 0 && st.in_service > st.capacity) {
            ++capacity_count_;
            add(name, t, "in service " + std::to_string(st.in_service) + " exceeds capacity " + std::to_string(st.capacity));
          }
        },
        [&](const std::string& name, SimTime) { --state_[name].in_service; });
  }

  const std::vector<Violation>& violations() const { return violations_; }
  std::size_t capacity_violations() const { return capacity_count_; }
  std::size_t fifo_violations() const { return fifo_count_; }
  bool ok() const { return capacity_count_ == 0 && fifo_count_ == 0; }

private:
  struct State {
    std::uint32_t capacity = 0;
    std::uint32_t in_service = 0;
    SimTime last_request{};
    bool any_grant = false;
  };

  // Keeps the first few for diagnostics; the counters stay exact.
  void add(const std::string& res, SimTime t, std::string what) {
    if (violations_.size() < 100) violations_.push_back({res, t, std::move(what)});
  }

  TaskTracker tracker_;
  std::map<std::string, State> state_;
  std::vector<Violation> violations_;
  std::size_t capacity_count_ = 0;
  std::size_t fifo_count_ = 0;
};

// ---------------------------------------------------------------- utilization timeline

/// Per-resource mean occupied slots / capacity over buckets
/// [k*bucket, (k+1)*bucket), truncated at the horizon.
class UtilizationTimeline final : public TraceSink {
public:
  explicit UtilizationTimeline(double bucket_s) : bucket_{SimTime::from_seconds(bucket_s)} {
    if (!(bucket_s > 0) || bucket_.micros() <= 0) throw InvalidArgument("bucket_s must be positive");
  }

  void begin(const TraceHeader& h) override {
    header_ = h;
    for (const auto& r : h.resources)
      if (r.kind != ResourceKind::datastore) index(r.name);
  }

  void append(const TraceRecord& r) override {
    last_ = std::max(last_, r.t_end);
    tracker_.step(
        r, [&](const std::string& name, SimTime t) { change(index(name), t, +1); },
        [&](const std::string& name, SimTime t) { change(index(name), t, -1); });
  }

  void finish() override {
    const SimTime h = horizon();
    for (std::size_t i = 0; i < res_.size(); ++i) advance(i, h);
  }

  SimTime horizon() const { return header_.horizon.value_or(last_); }
  std::size_t bucket_count() const {
    const auto h = horizon().micros();
    return static_cast<std::size_t>((h + bucket_.micros() - 1) / bucket_.micros());
  }

  std::vector<std::string> resources() const {
    std::vector<std::string> out;
    for (const auto& r : res_) out.push_back(r.name);
    return out;
  }

  /// Fraction of capacity in use per bucket. Resources without a known
  /// capacity are normalized by their peak concurrency.
  std::vector<double> series(const std::string& name) const {
    const auto it = std::find_if(res_.begin(), res_.end(), [&](const Res& r) { return r.name == name; });
    if (it == res_.end()) throw InvalidArgument("no such resource in trace: " + name);
    const auto* info = header_.find(name);
    double cap = info && info->capacity ? info->capacity : std::max<std::uint32_t>(1, it->peak);
    const std::size_t n = bucket_count();
    std::vector<double> out(n, 0.0);
    const auto h = horizon().micros();
    for (std::size_t k = 0; k < n; ++k) {
      const auto start = static_cast<std::int64_t>(k) * bucket_.micros();
      const auto len = std::min(bucket_.micros(), h - start);
      const double busy = k < it->busy_us.size() ? it->busy_us[k] : 0.0;
      out[k] = len > 0 ? busy / (cap * static_cast<double>(len)) : 0.0;
    }
    return out;
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << "bucket_start_s";
    std::vector<std::vector<double>> cols;
    for (const auto& r : res_) {
      out << ',' << r.name;
      cols.push_back(series(r.name));
    }
    out << '\n';
    char buf[64];
    for (std::size_t k = 0; k < bucket_count(); ++k) {
      out << text::format_real(static_cast<double>(k) * bucket_.seconds());
      for (const auto& c : cols) {
        std::snprintf(buf, sizeof buf, ",%.6f", c[k]);
        out << buf;
      }
      out << '\n';
    }
  }

private:
  struct Res {
    std::string name;
    int occupied = 0;
    std::uint32_t peak = 0;
    SimTime last{};
    std::vector<double> busy_us; ///< slot-microseconds per bucket
  };

  std::size_t index(const std::string& name) {
    for (std::size_t i = 0; i < res_.size(); ++i)
      if (res_[i].name == name) return i;
    res_.emplace_back();
    res_.back().name = name;
    return res_.size() - 1;
  }

  void advance(std::size_t i, SimTime to) {
    auto& r = res_[i];
    if (to <= r.last) return;
    if (r.occupied > 0) {
      auto t = r.last.micros();
      const auto end = to.micros();
      while (t < end) {
        const auto k = static_cast<std::size_t>(t / bucket_.micros());
        const auto bucket_end = static_cast<std::int64_t>(k + 1) * bucket_.micros();
        const auto stop = std::min(bucket_end, end);
        if (r.busy_us.size() <= k) r.busy_us.resize(k + 1, 0.0);
        r.busy_us[k] += static_cast<double>(r.occupied) * static_cast<double>(stop - t);
        t = stop;
      }
    }
    r.last = to;
  }

  void change(std::size_t i, SimTime t, int delta) {
    advance(i, t);
    auto& r = res_[i];
    r.occupied += delta;
    if (r.occupied < 0) throw MalformedTrace("resource " + r.name + " released more often than granted");
    r.peak = std::max(r.peak, static_cast<std::uint32_t>(r.occupied));
  }

  SimTime bucket_;
  TraceHeader header_;
  SimTime last_{};
  TaskTracker tracker_;
  std::vector<Res> res_;
};

// ---------------------------------------------------------------- arrivals heatmap

struct HeatmapCell {
  double mean = 0.0; ///< arrivals per hour
  double sd = 0.0;
  std::uint64_t hours = 0; ///< complete hour instances observed
};

/// Mean arrivals per hour per (weekday, local hour). Only hour instances
/// that lie entirely inside [0, horizon) contribute.
class ArrivalHeatmap final : public TraceSink {
public:
  void begin(const TraceHeader& h) override { header_ = h; }

  void append(const TraceRecord& r) override {
    last_ = std::max(last_, r.t_end);
    const auto s = tracker_.step(r, [](const std::string&, SimTime) {}, [](const std::string&, SimTime) {});
    if (s.opened && r.task_id == 0) {
      const auto k = hour_instance(r.t_start);
      if (k >= 0) {
        if (counts_.size() <= static_cast<std::size_t>(k)) counts_.resize(static_cast<std::size_t>(k) + 1, 0);
        ++counts_[static_cast<std::size_t>(k)];
      }
      arrival_times_.push_back(r.t_start.seconds());
    }
  }

  std::array<HeatmapCell, stats::kCells> cells() const {
    const double base = header_.epoch + static_cast<double>(header_.tz_offset_s);
    const double first_full = std::ceil(base / 3600.0) * 3600.0; // first hour boundary at or after t=0
    const double horizon = header_.horizon.value_or(last_).seconds();
    std::array<double, stats::kCells> sum{}, sumsq{};
    std::array<std::uint64_t, stats::kCells> n{};
    for (std::int64_t k = 0;; ++k) {
      const double start = first_full + 3600.0 * static_cast<double>(k);
      if (start + 3600.0 - base > horizon + 1e-9) break;
      const auto slot = stats::calendar_slot(start, 0).index();
      const double c = static_cast<std::size_t>(k) < counts_.size() ? counts_[static_cast<std::size_t>(k)] : 0.0;
      sum[slot] += c;
      sumsq[slot] += c * c;
      ++n[slot];
    }
    std::array<HeatmapCell, stats::kCells> out{};
    for (std::size_t i = 0; i < stats::kCells; ++i) {
      if (n[i] == 0) continue;
      out[i].hours = n[i];
      out[i].mean = sum[i] / static_cast<double>(n[i]);
      if (n[i] > 1) {
        const double var = (sumsq[i] - static_cast<double>(n[i]) * out[i].mean * out[i].mean) / static_cast<double>(n[i] - 1);
        out[i].sd = std::sqrt(std::max(0.0, var));
      }
    }
    return out;
  }

  /// Raw arrival times in sim seconds, in stream order.
  const std::vector<double>& arrival_times() const { return arrival_times_; }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << "weekday,hour,mean_arrivals,sd,hours\n";
    const auto c = cells();
    char buf[128];
    for (std::size_t i = 0; i < stats::kCells; ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f,%llu\n", i / stats::kHours, i % stats::kHours, c[i].mean,
                    c[i].sd, static_cast<unsigned long long>(c[i].hours));
      out << buf;
    }
  }

private:
  std::int64_t hour_instance(SimTime t) const {
    const double base = header_.epoch + static_cast<double>(header_.tz_offset_s);
    const double first_full = std::ceil(base / 3600.0) * 3600.0;
    const double wall = base + t.seconds();
    if (wall < first_full) return -1;
    return static_cast<std::int64_t>(std::floor((wall - first_full) / 3600.0));
  }

  TraceHeader header_;
  SimTime last_{};
  TaskTracker tracker_;
  std::vector<double> counts_;
  std::vector<double> arrival_times_;
};

// ---------------------------------------------------------------- series and Q-Q

/// Collects named metric series from a trace: `<type>_exec` (exec op
/// durations), `<type>_task` (whole task durations), `wait` and
/// `interarrival`. Memory is linear in the trace; use for reports.
class SeriesCollector final : public TraceSink {
public:
  void append(const TraceRecord& r) override {
    auto& open = elapsed_[(r.pipeline_id << 12) | (r.task_id & 0xfff)];
    open += r.duration();
    const auto s = tracker_.step(r, [](const std::string&, SimTime) {}, [](const std::string&, SimTime) {});
    const std::string type{to_string(r.task_type)};
    if (s.opened && r.task_id == 0) arrivals_.push_back(r.t_start.seconds());
    if (r.op == SysOpKind::exec && r.status == OpStatus::ok) series_[type + "_exec"].push_back(r.duration().seconds());
    if (r.op == SysOpKind::req && r.status == OpStatus::ok) series_["wait"].push_back(r.duration().seconds());
    if (s.closed) {
      if (r.status != OpStatus::truncated) series_[type + "_task"].push_back(open.seconds());
      elapsed_.erase((r.pipeline_id << 12) | (r.task_id & 0xfff));
    }
  }

  void finish() override {
    auto a = arrivals_;
    std::sort(a.begin(), a.end());
    auto& ia = series_["interarrival"];
    ia.clear();
    for (std::size_t i = 1; i < a.size(); ++i) ia.push_back(a[i] - a[i - 1]);
  }

  /// Accepts `train_duration` style aliases for `<type>_exec`.
  const std::vector<double>& series(std::string name) const {
    static const std::vector<double> empty;
    if (name.size() > 9 && name.compare(name.size() - 9, 9, "_duration") == 0) name = name.substr(0, name.size() - 9) + "_exec";
    const auto it = series_.find(name);
    return it == series_.end() ? empty : it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : series_) out.push_back(k);
    return out;
  }

private:
  TaskTracker tracker_;
  std::unordered_map<std::uint64_t, SimTime> elapsed_;
  std::map<std::string, std::vector<double>> series_;
  std::vector<double> arrivals_;
};

struct QqPoint {
  double p;
  double a;
  double b;
};

/// Equal-probability quantile pairs at p = i/(q+1), i = 1..q (type-7).
inline std::vector<QqPoint> qq_export(std::vector<double> a, std::vector<double> b, std::size_t q) {
  if (q == 0) throw InvalidArgument("qq_export needs at least one quantile");
  if (a.size() < q || b.size() < q)
    throw TooFewPoints("qq_export needs at least " + std::to_string(q) + " points per series, got " +
                       std::to_string(a.size()) + " and " + std::to_string(b.size()));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<QqPoint> out;
  out.reserve(q);
  for (std::size_t i = 1; i <= q; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(q + 1);
    out.push_back({p, stats::quantile_sorted(a, p), stats::quantile_sorted(b, p)});
  }
  return out;
}

inline void write_qq_csv(const std::string& path, const std::vector<QqPoint>& pts, std::string_view a_label = "a",
                         std::string_view b_label = "b") {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path);
  out << "p," << a_label << ',' << b_label << '\n';
  for (const auto& p : pts) out << text::format_real(p.p) << ',' << text::format_real(p.a) << ',' << text::format_real(p.b) << '\n';
}

} // namespace pipesim::trace
