#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "pipesim/domain.hpp"
#include "pipesim/engine/arrivals.hpp"
#include "pipesim/engine/executors.hpp"
#include "pipesim/engine/resource_state.hpp"
#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"
#include "pipesim/sim_time.hpp"
#include "pipesim/trace/summary.hpp"

namespace pipesim::engine {

inline constexpr std::string_view kRegistryName = "registry";

struct EngineConfig {
  std::string run_id = "run";
  std::uint64_t seed = 1;
  SimTime horizon{};
  double epoch_anchor = 1704067200.0; ///< wall-clock seconds at t = 0 (a Monday, 00:00 UTC)
  std::int64_t tz_offset_s = 0;
  std::vector<Resource> resources;
  /// Resource name per TaskType; deploy uses the model registry.
  std::array<std::string, 6> task_resource{"compute", "training", "compute", "training", "training", ""};
  std::string datastore = "datastore";
  ExecParams exec;
  double network_overhead = 1.05;
  double fresh_data_tau_s = 30.0 * 86400.0;
  double potential_w_perf = 0.5;
  QueueFactory queue = fifo_factory();
  /// Called once per simulated day with the current time and arrivals so far.
  std::function<void(SimTime, std::uint64_t)> progress;

  void validate() const {
    if (!text::is_identifier(run_id)) throw ConfigInvalid("run id '" + run_id + "' is not a plain identifier");
    if (horizon < SimTime{}) throw ConfigInvalid("horizon must be >= 0");
    if (!(network_overhead > 0)) throw ConfigInvalid("network overhead must be > 0");
    if (!(fresh_data_tau_s > 0)) throw ConfigInvalid("fresh data time constant must be > 0");
    if (!(potential_w_perf >= 0 && potential_w_perf <= 1)) throw ConfigInvalid("potential weight must lie in [0, 1]");
    if (!(exec.compression_sigma >= 0)) throw ConfigInvalid("compression sigma must be >= 0");
    if (!exec.compression) throw ConfigInvalid("no compression profile");
    for (std::size_t i = 0; i < resources.size(); ++i) {
      try {
        resources[i].validate();
      } catch (const InvalidArgument& e) {
        throw ConfigInvalid(e.what());
      }
      if (!text::is_identifier(resources[i].name)) throw ConfigInvalid("resource name '" + resources[i].name + "' is not a plain identifier");
      if (resources[i].name == kRegistryName) throw ConfigInvalid("resource name 'registry' is reserved");
      for (std::size_t j = 0; j < i; ++j)
        if (resources[j].name == resources[i].name) throw ConfigInvalid("duplicate resource " + resources[i].name);
    }
  }
};

struct TaskRecord {
  std::uint32_t task_id = 0;
  TaskType type = TaskType::deploy;
  SimTime start{};
  SimTime end{};
  SimTime wait{};
  trace::OpStatus status = trace::OpStatus::ok;
  SimTime duration() const { return end - start; }
};

enum class PipelineOutcome : std::uint8_t { completed, gate_failed, truncated, in_queue };

struct PipelineRecord {
  std::uint64_t id = 0;
  SimTime arrival{};
  SimTime end{};
  SimTime total_duration{}; ///< sum of task durations
  PipelineOutcome outcome = PipelineOutcome::completed;
  std::vector<TaskRecord> tasks;
};

/// Optional hooks into a running simulation.
class RunObserver {
public:
  virtual ~RunObserver() = default;
  virtual void on_pipeline(const PipelineRecord&) {}
  /// A task produced a new model version at simulation time `at`.
  virtual void on_model(const TrainedModel&, SimTime /*at*/) {}
  /// A deploy registered `m`; `potential` is its retraining potential at the horizon.
  virtual void on_deploy(const TrainedModel&, SimTime /*at*/, double /*potential*/) {}
};

class Simulation {
public:
  Simulation(EngineConfig cfg, const EngineModels& models, synth::SynthConfig synth, ExecutorRegistry registry,
             std::unique_ptr<ArrivalSource> arrivals, std::unique_ptr<PipelineSource> pipelines)
      : cfg_{std::move(cfg)}, models_{&models}, synth_{std::move(synth)}, registry_{std::move(registry)},
        arrivals_{std::move(arrivals)}, pipelines_{std::move(pipelines)}, rng_{cfg_.seed} {
    cfg_.validate();
    synth_.validate();
    if (!arrivals_ || !pipelines_) throw InvalidArgument("simulation needs an arrival source and a pipeline source");
    ctx_.models = models_;
    ctx_.synth = &synth_;
    ctx_.params = cfg_.exec;
    ctx_.rng = &rng_;
    ctx_.resources = cfg_.resources;
    for (const auto& r : cfg_.resources) {
      ctx_.resource_names.push_back(r.name);
      states_.emplace_back(r, cfg_.queue ? cfg_.queue() : std::make_unique<FifoQueue>());
    }
    ctx_.registry = static_cast<int>(ctx_.resource_names.size());
    ctx_.resource_names.emplace_back(kRegistryName);
    auto find = [&](const std::string& name) -> int {
      for (std::size_t i = 0; i < cfg_.resources.size(); ++i)
        if (cfg_.resources[i].name == name) return static_cast<int>(i);
      return -1;
    };
    for (std::size_t t = 0; t < 6; ++t) {
      const auto& name = cfg_.task_resource[t];
      if (name.empty()) continue;
      const int idx = find(name);
      if (idx < 0) throw ConfigInvalid("resource '" + name + "' for " + std::string(to_string(kTaskTypes[t])) + " tasks is not defined");
      if (cfg_.resources[static_cast<std::size_t>(idx)].kind == ResourceKind::datastore)
        throw ConfigInvalid(std::string(to_string(kTaskTypes[t])) + " tasks cannot run on datastore " + name);
      ctx_.task_resource[t] = idx;
    }
    if (!cfg_.datastore.empty()) {
      ctx_.datastore = find(cfg_.datastore);
      if (ctx_.datastore < 0) throw ConfigInvalid("datastore '" + cfg_.datastore + "' is not defined");
      if (cfg_.resources[static_cast<std::size_t>(ctx_.datastore)].kind != ResourceKind::datastore)
        throw ConfigInvalid("resource '" + cfg_.datastore + "' is not a datastore");
    }
    record_.run_id = cfg_.run_id;
  }

  trace::TraceHeader header() const {
    trace::TraceHeader h;
    h.run_id = cfg_.run_id;
    h.seed = cfg_.seed;
    h.horizon = cfg_.horizon;
    h.epoch = cfg_.epoch_anchor;
    h.tz_offset_s = cfg_.tz_offset_s;
    h.overhead = cfg_.network_overhead;
    for (const auto& r : cfg_.resources) h.resources.push_back({r.name, r.kind, r.kind == ResourceKind::datastore ? 1u : r.capacity});
    h.resources.push_back({std::string(kRegistryName), ResourceKind::datastore, 1});
    return h;
  }

  /// Runs to the horizon once; a Simulation is single-use.
  trace::RunSummary run(trace::TraceSink& sink, RunObserver* observer = nullptr) {
    if (ran_) throw InvalidArgument("a Simulation can only run once");
    ran_ = true;
    observer_ = observer;
    trace::Summarizer summarizer;
    trace::TeeSink tee{{&summarizer, &sink}};
    sink_ = &tee;
    tee.begin(header());

    if (auto first = arrivals_->next(std::nullopt, rng_.arrivals); first && *first < cfg_.horizon) {
      last_arrival_ = *first;
      push(*first, EventKind::arrival, 0);
    }
    SimTime next_day = SimTime::from_seconds(86400.0);
    while (!events_.empty() && events_.top().t < cfg_.horizon) {
      const Event e = events_.top();
      events_.pop();
      now_ = e.t;
      if (cfg_.progress && now_ >= next_day) {
        cfg_.progress(now_, arrived_);
        while (next_day <= now_) next_day += SimTime::from_seconds(86400.0);
      }
      switch (e.kind) {
      case EventKind::arrival: on_arrival(); break;
      case EventKind::op_done: on_op_done(e.slot); break;
      case EventKind::grant: on_grant(e.slot); break;
      }
    }
    now_ = cfg_.horizon;
    truncate_all();
    for (auto& s : states_) s.finish(cfg_.horizon);
    tee.finish();

    auto summary = summarizer.summary();
    const double h = cfg_.horizon.seconds();
    for (std::size_t i = 0; i < states_.size(); ++i)
      if (auto* u = find_usage(summary, cfg_.resources[i].name)) u->mean_queue_length = h > 0 ? states_[i].queue_seconds() / h : 0.0;
    summary.mean_potential = deploys_ ? potential_sum_ / static_cast<double>(deploys_) : 0.0;
    sink_ = nullptr;
    return summary;
  }

  /// Engine-side slot-second integrals, for cross-checking trace analytics.
  double busy_slot_seconds(std::string_view resource) const {
    for (const auto& s : states_)
      if (s.resource().name == resource) return s.busy_slot_seconds();
    throw InvalidArgument("unknown resource " + std::string(resource));
  }

private:
  enum class EventKind : std::uint8_t { arrival, op_done, grant };
  struct Event {
    SimTime t;
    std::uint64_t seq;
    EventKind kind;
    std::uint32_t slot;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return a.t != b.t ? a.t > b.t : a.seq > b.seq; }
  };

  struct Live {
    bool active = false;
    PipelineGraph graph;
    std::vector<std::uint32_t> order;
    std::size_t next_task = 0;
    PipelineState state;
    TaskPlan plan;
    std::size_t op = 0;
    SimTime op_start{};
    SimTime task_start{};
    SimTime task_wait{};
    bool waiting = false;
    PipelineRecord record;
  };

  static trace::ResourceUsage* find_usage(trace::RunSummary& s, const std::string& name) {
    for (auto& r : s.resources)
      if (r.name == name) return &r;
    return nullptr;
  }

  void push(SimTime t, EventKind kind, std::uint32_t slot) { events_.push(Event{t, seq_++, kind, slot}); }

  std::uint32_t allocate() {
    if (!free_.empty()) {
      const auto s = free_.back();
      free_.pop_back();
      return s;
    }
    live_.emplace_back();
    return static_cast<std::uint32_t>(live_.size() - 1);
  }

  void on_arrival() {
    const std::uint64_t id = arrived_++;
    if (auto next = arrivals_->next(last_arrival_, rng_.arrivals); next && *next < cfg_.horizon) {
      if (*next <= last_arrival_) throw InvalidArgument("arrival source went backwards in time");
      last_arrival_ = *next;
      push(*next, EventKind::arrival, 0);
    }
    PipelineJob job = pipelines_->make(id, now_, rng_);
    if (const auto v = validate_pipeline(job.graph); !v.empty())
      throw InvalidArgument("pipeline " + std::to_string(id) + " is invalid: " + v.front().message);
    if (!job.asset.valid()) throw InvalidArgument("pipeline " + std::to_string(id) + " has an asset below the floor");
    const auto slot = allocate();
    Live& l = live_[slot];
    l.active = true;
    l.graph = std::move(job.graph);
    l.graph.id = id;
    l.order = *topological_order(l.graph);
    l.next_task = 0;
    l.state = PipelineState{};
    l.state.pipeline_id = id;
    l.state.asset = job.asset;
    l.waiting = false;
    l.record = PipelineRecord{};
    l.record.id = id;
    l.record.arrival = now_;
    start_task(slot);
  }

  const TaskSpec& current_task(const Live& l) const { return l.graph.vertices[l.order[l.next_task]]; }

  void start_task(std::uint32_t slot) {
    Live& l = live_[slot];
    if (l.next_task >= l.order.size()) {
      finish_pipeline(slot, PipelineOutcome::completed);
      return;
    }
    const TaskSpec& task = current_task(l);
    ctx_.now = now_;
    l.plan = registry_.at(task.type)(task, l.state, ctx_);
    validate_plan(l.plan, task.type, ctx_.resource_names.size());
    l.op = 0;
    l.task_start = now_;
    l.task_wait = SimTime{};
    run_ops(slot);
  }

  /// Advances the pipeline through its current plan until it blocks on a
  /// request, waits for a timed op, or finishes the task.
  void run_ops(std::uint32_t slot) {
    while (true) {
      Live& l = live_[slot];
      if (l.op >= l.plan.ops.size()) {
        finish_task(slot);
        return;
      }
      const PlannedOp& op = l.plan.ops[l.op];
      l.op_start = now_;
      switch (op.kind) {
      case SysOpKind::req: {
        auto& rs = states_[static_cast<std::size_t>(op.resource)];
        if (!rs.try_acquire(now_)) {
          rs.enqueue(Waiting{slot, l.record.id, now_, ticket_++}, now_);
          l.waiting = true;
          return;
        }
        emit(l, op, now_, now_, status_for(l));
        ++l.op;
        break;
      }
      case SysOpKind::rel: {
        emit(l, op, now_, now_, status_for(l));
        if (auto next = states_[static_cast<std::size_t>(op.resource)].release(now_)) push(now_, EventKind::grant, next->slot);
        ++l.op;
        break;
      }
      default:
        if (op.duration > SimTime{}) {
          push(now_ + op.duration, EventKind::op_done, slot);
          return;
        }
        emit(l, op, now_, now_, status_for(l));
        ++l.op;
        break;
      }
    }
  }

  trace::OpStatus status_for(const Live& l) const {
    return l.plan.gate_failed && l.op + 1 == l.plan.ops.size() ? trace::OpStatus::gate_failed : trace::OpStatus::ok;
  }

  void on_op_done(std::uint32_t slot) {
    Live& l = live_[slot];
    emit(l, l.plan.ops[l.op], l.op_start, now_, status_for(l));
    ++l.op;
    run_ops(slot);
  }

  void on_grant(std::uint32_t slot) {
    Live& l = live_[slot];
    l.waiting = false;
    l.task_wait += now_ - l.op_start;
    emit(l, l.plan.ops[l.op], l.op_start, now_, status_for(l));
    ++l.op;
    run_ops(slot);
  }

  void finish_task(std::uint32_t slot) {
    Live& l = live_[slot];
    const TaskSpec& task = current_task(l);
    TaskRecord tr{task.id, task.type, l.task_start, now_, l.task_wait,
                  l.plan.gate_failed ? trace::OpStatus::gate_failed : trace::OpStatus::ok};
    l.record.tasks.push_back(tr);
    if (l.plan.produced) {
      l.state.model = *l.plan.produced;
      if (observer_) observer_->on_model(*l.state.model, now_);
    }
    if (task.type == TaskType::deploy && l.state.model) {
      TrainedModel m = *l.state.model;
      m.new_data_fraction = 1.0 - std::exp(-(cfg_.horizon - now_).seconds() / cfg_.fresh_data_tau_s);
      const double pot = potential_improvement(m, cfg_.potential_w_perf, 1.0 - cfg_.potential_w_perf);
      potential_sum_ += pot;
      ++deploys_;
      if (observer_) observer_->on_deploy(m, now_, pot);
    }
    if (l.plan.gate_failed) {
      finish_pipeline(slot, PipelineOutcome::gate_failed);
      return;
    }
    ++l.next_task;
    start_task(slot);
  }

  void finish_pipeline(std::uint32_t slot, PipelineOutcome outcome) {
    Live& l = live_[slot];
    l.record.end = now_;
    l.record.outcome = outcome;
    SimTime total{};
    for (const auto& t : l.record.tasks) total += t.duration();
    l.record.total_duration = total;
    if (observer_) observer_->on_pipeline(l.record);
    l.active = false;
    l.plan = TaskPlan{};
    free_.push_back(slot);
  }

  /// Pipelines still running at the horizon get one truncated record for
  /// the operation they are in, in pipeline-id order.
  void truncate_all() {
    std::vector<std::uint32_t> slots;
    for (std::uint32_t s = 0; s < live_.size(); ++s)
      if (live_[s].active) slots.push_back(s);
    std::sort(slots.begin(), slots.end(), [&](auto a, auto b) { return live_[a].record.id < live_[b].record.id; });
    for (auto s : slots) {
      Live& l = live_[s];
      const bool queued = l.waiting;
      emit(l, l.plan.ops[l.op], l.op_start, cfg_.horizon, trace::OpStatus::truncated);
      const TaskSpec& task = current_task(l);
      if (queued) l.task_wait += cfg_.horizon - l.op_start;
      l.record.tasks.push_back(TaskRecord{task.id, task.type, l.task_start, cfg_.horizon, l.task_wait, trace::OpStatus::truncated});
      finish_pipeline(s, queued ? PipelineOutcome::in_queue : PipelineOutcome::truncated);
    }
  }

  void emit(const Live& l, const PlannedOp& op, SimTime start, SimTime end, trace::OpStatus status) {
    const TaskSpec& task = current_task(l);
    record_.pipeline_id = l.record.id;
    record_.task_id = task.id;
    record_.task_type = task.type;
    record_.op = op.kind;
    if (op.resource >= 0) record_.resource = ctx_.resource_names[static_cast<std::size_t>(op.resource)];
    else record_.resource.reset();
    record_.t_start = start;
    record_.t_end = end;
    record_.bytes = op.bytes;
    record_.status = status;
    sink_->append(record_);
  }

  EngineConfig cfg_;
  const EngineModels* models_;
  synth::SynthConfig synth_;
  ExecutorRegistry registry_;
  std::unique_ptr<ArrivalSource> arrivals_;
  std::unique_ptr<PipelineSource> pipelines_;
  RngStreams rng_;
  ExecutionContext ctx_;
  std::vector<ResourceState> states_;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::vector<Live> live_;
  std::vector<std::uint32_t> free_;
  trace::TraceSink* sink_ = nullptr;
  RunObserver* observer_ = nullptr;
  trace::TraceRecord record_;
  SimTime now_{};
  SimTime last_arrival_{};
  std::uint64_t seq_ = 0;
  std::uint64_t ticket_ = 0;
  std::uint64_t arrived_ = 0;
  std::uint64_t deploys_ = 0;
  double potential_sum_ = 0.0;
  bool ran_ = false;
};

} // namespace pipesim::engine
