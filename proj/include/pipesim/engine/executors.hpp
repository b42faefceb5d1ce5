#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pipesim/domain.hpp"
#include "pipesim/engine/compression.hpp"
#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"
#include "pipesim/sim_time.hpp"
#include "pipesim/stats/curve.hpp"
#include "pipesim/stats/gmm.hpp"
#include "pipesim/synth.hpp"

namespace pipesim::engine {

/// One system operation with its duration already drawn.
struct PlannedOp {
  SysOpKind kind = SysOpKind::exec;
  int resource = -1; ///< index into ExecutionContext::resource_names, -1 for none
  SimTime duration{};
  std::optional<std::uint64_t> bytes;
};

/// What an executor decides for one task: its operation sequence, whether
/// the quality gate failed, and the model it leaves behind.
struct TaskPlan {
  std::vector<PlannedOp> ops;
  bool gate_failed = false;
  std::optional<TrainedModel> produced;
};

/// Statistical models consumed by the built-in executors. Duration mixtures
/// are one-dimensional over ln(seconds).
struct EngineModels {
  std::optional<stats::ExpCurve> preprocess_curve;
  std::array<std::optional<stats::GmmSampler>, 5> train; ///< indexed by Framework
  std::optional<stats::GmmSampler> evaluate;
  std::optional<stats::GmmSampler> assets;
};

struct ExecParams {
  double compression_sigma = 0.1;
  const CompressionProfile* compression = &googlenet_profile();
  bool preprocess_noise = true;
  double harden_clever_bump = 0.1;
};

/// Mutable per-pipeline state threaded through its tasks.
struct PipelineState {
  std::uint64_t pipeline_id = 0;
  DataAsset asset;
  std::optional<TrainedModel> model;
  SimTime last_train_exec{};
};

struct ExecutionContext {
  const EngineModels* models = nullptr;
  const synth::SynthConfig* synth = nullptr;
  ExecParams params;
  std::vector<std::string> resource_names; ///< engine resources, then the model registry
  std::vector<Resource> resources;
  std::array<int, 6> task_resource{-1, -1, -1, -1, -1, -1}; ///< indexed by TaskType
  int datastore = -1;
  int registry = -1;
  RngStreams* rng = nullptr;
  SimTime now{};

  int resource_for(TaskType t) const {
    const int r = task_resource[static_cast<std::size_t>(t)];
    if (r < 0) throw ConfigInvalid("no resource assigned to " + std::string(to_string(t)) + " tasks");
    return r;
  }
  int store() const {
    if (datastore < 0) throw ConfigInvalid("no datastore configured");
    return datastore;
  }
  PlannedOp transfer(SysOpKind kind, double bytes) const {
    const auto& ds = resources.at(static_cast<std::size_t>(store()));
    const auto b = static_cast<std::uint64_t>(std::llround(std::max(0.0, bytes)));
    return {kind, datastore, SimTime::from_seconds(ds.transfer_seconds(static_cast<double>(b))), b};
  }
};

using Executor = std::function<TaskPlan(const TaskSpec&, PipelineState&, ExecutionContext&)>;

namespace detail {

inline const stats::GmmSampler& require(const std::optional<stats::GmmSampler>& s, const std::string& name) {
  if (!s) throw ModelMissing("duration model '" + name + "' is not loaded");
  return *s;
}

inline SimTime log_mixture_draw(const stats::GmmSampler& s, Rng& rng) {
  return SimTime::from_seconds(std::exp(s.sample(rng)(0)));
}

inline const TrainedModel& require_model(const PipelineState& st, TaskType t) {
  if (!st.model) throw InvalidArgument(std::string(to_string(t)) + " task has no trained model to work on");
  return *st.model;
}

/// Training time scaled by N(1, sigma), floored at half of it.
inline SimTime retrain_like(const PipelineState& st, ExecutionContext& ctx) {
  double f = 1.0;
  if (ctx.params.compression_sigma > 0)
    f = std::normal_distribution<double>{1.0, ctx.params.compression_sigma}(ctx.rng->noise);
  f = std::max(f, 0.5);
  return SimTime::from_seconds(st.last_train_exec.seconds() * f);
}

} // namespace detail

inline TaskPlan execute_preprocess(const TaskSpec&, PipelineState& st, ExecutionContext& ctx) {
  if (!ctx.models->preprocess_curve) throw ModelMissing("preprocess curve model is not loaded");
  const auto& curve = *ctx.models->preprocess_curve;
  double secs = curve.deterministic_seconds(st.asset.cells());
  if (ctx.params.preprocess_noise) secs *= curve.noise_factor(ctx.rng->noise);
  const int r = ctx.resource_for(TaskType::preprocess);
  TaskPlan p;
  p.ops = {{SysOpKind::req, r, {}, {}},
           ctx.transfer(SysOpKind::read, static_cast<double>(st.asset.bytes)),
           {SysOpKind::exec, r, SimTime::from_seconds(secs), {}},
           ctx.transfer(SysOpKind::write, static_cast<double>(st.asset.bytes)),
           {SysOpKind::rel, r, {}, {}}};
  return p;
}

inline TaskPlan execute_train(const TaskSpec& task, PipelineState& st, ExecutionContext& ctx) {
  const auto& params = std::get<TrainParams>(task.params);
  const std::string name = "train." + std::string(to_string(params.framework));
  const auto& mix = detail::require(ctx.models->train[static_cast<std::size_t>(params.framework)], name);
  const SimTime exec = detail::log_mixture_draw(mix, ctx.rng->durations);
  st.last_train_exec = exec;
  TrainedModel m = synth::materialize_model(task, st.asset, *ctx.synth, ctx.rng->models, st.pipeline_id);
  const int r = ctx.resource_for(TaskType::train);
  TaskPlan p;
  p.ops = {{SysOpKind::req, r, {}, {}},
           ctx.transfer(SysOpKind::read, static_cast<double>(st.asset.bytes)),
           {SysOpKind::exec, r, exec, {}},
           ctx.transfer(SysOpKind::write, m.size_bytes),
           {SysOpKind::rel, r, {}, {}}};
  p.produced = m;
  return p;
}

inline TaskPlan execute_evaluate(const TaskSpec& task, PipelineState& st, ExecutionContext& ctx) {
  const auto& m = detail::require_model(st, TaskType::evaluate);
  const auto& mix = detail::require(ctx.models->evaluate, "evaluate");
  const int r = ctx.resource_for(TaskType::evaluate);
  TaskPlan p;
  p.ops = {{SysOpKind::req, r, {}, {}},
           ctx.transfer(SysOpKind::read, m.size_bytes),
           {SysOpKind::exec, r, detail::log_mixture_draw(mix, ctx.rng->durations), {}},
           {SysOpKind::rel, r, {}, {}}};
  p.gate_failed = m.performance < std::get<EvaluateParams>(task.params).quality_gate;
  return p;
}

inline TaskPlan execute_compress(const TaskSpec& task, PipelineState& st, ExecutionContext& ctx) {
  const auto& m = detail::require_model(st, TaskType::compress);
  const TrainedModel out = apply_compression(m, std::get<CompressParams>(task.params).prune_level, *ctx.params.compression);
  const int r = ctx.resource_for(TaskType::compress);
  TaskPlan p;
  p.ops = {{SysOpKind::req, r, {}, {}},
           ctx.transfer(SysOpKind::read, m.size_bytes),
           {SysOpKind::exec, r, detail::retrain_like(st, ctx), {}},
           ctx.transfer(SysOpKind::write, out.size_bytes),
           {SysOpKind::rel, r, {}, {}}};
  p.produced = out;
  return p;
}

inline TaskPlan execute_harden(const TaskSpec&, PipelineState& st, ExecutionContext& ctx) {
  const auto& m = detail::require_model(st, TaskType::harden);
  TrainedModel out = m;
  out.version = m.version + 1;
  out.clever_score = m.clever_score + ctx.params.harden_clever_bump;
  const int r = ctx.resource_for(TaskType::harden);
  TaskPlan p;
  p.ops = {{SysOpKind::req, r, {}, {}},
           ctx.transfer(SysOpKind::read, m.size_bytes),
           {SysOpKind::exec, r, detail::retrain_like(st, ctx), {}},
           ctx.transfer(SysOpKind::write, out.size_bytes),
           {SysOpKind::rel, r, {}, {}}};
  p.produced = out;
  return p;
}

/// Registers the current model version: a zero-time read and write against
/// the model registry.
inline TaskPlan execute_deploy(const TaskSpec&, PipelineState& st, ExecutionContext& ctx) {
  const auto bytes = st.model ? static_cast<std::uint64_t>(std::llround(st.model->size_bytes)) : 0;
  TaskPlan p;
  p.ops = {{SysOpKind::read, ctx.registry, {}, bytes}, {SysOpKind::write, ctx.registry, {}, bytes}};
  return p;
}

class ExecutorRegistry {
public:
  static ExecutorRegistry defaults() {
    ExecutorRegistry r;
    r.set(TaskType::preprocess, execute_preprocess);
    r.set(TaskType::train, execute_train);
    r.set(TaskType::evaluate, execute_evaluate);
    r.set(TaskType::compress, execute_compress);
    r.set(TaskType::harden, execute_harden);
    r.set(TaskType::deploy, execute_deploy);
    return r;
  }

  void set(TaskType t, Executor e) { table_[static_cast<std::size_t>(t)] = std::move(e); }
  void erase(TaskType t) { table_[static_cast<std::size_t>(t)] = nullptr; }
  bool has(TaskType t) const { return static_cast<bool>(table_[static_cast<std::size_t>(t)]); }

  const Executor& at(TaskType t) const {
    const auto& e = table_[static_cast<std::size_t>(t)];
    if (!e) throw ExecutorMissing("no executor registered for " + std::string(to_string(t)) + " tasks");
    return e;
  }

private:
  std::array<Executor, 6> table_{};
};

/// Checks the structural rules every plan must satisfy: it starts with req
/// or read, acquires before it executes, releases what it takes, and its
/// last op is the only one that can close the task.
inline void validate_plan(const TaskPlan& p, TaskType type, std::size_t resource_count) {
  auto fail = [&](const std::string& why) {
    throw InvalidArgument(std::string(to_string(type)) + " executor produced an invalid plan: " + why);
  };
  if (p.ops.empty()) fail("no operations");
  if (p.ops.front().kind != SysOpKind::req && p.ops.front().kind != SysOpKind::read) fail("must begin with req or read");
  if (p.ops.back().kind != SysOpKind::rel && p.ops.back().kind != SysOpKind::write) fail("must end with rel or write");
  std::vector<int> held;
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    const auto& op = p.ops[i];
    const bool last = i + 1 == p.ops.size();
    if (op.resource >= static_cast<int>(resource_count)) fail("resource index out of range");
    if (op.duration < SimTime{}) fail("negative duration");
    if (op.bytes.has_value() != (op.kind == SysOpKind::read || op.kind == SysOpKind::write)) fail("bytes on a non-transfer op");
    switch (op.kind) {
    case SysOpKind::req:
      if (op.resource < 0) fail("req without resource");
      if (std::find(held.begin(), held.end(), op.resource) != held.end()) fail("resource requested twice");
      if (op.duration != SimTime{}) fail("req carries its own duration");
      held.push_back(op.resource);
      break;
    case SysOpKind::rel: {
      const auto h = std::find(held.begin(), held.end(), op.resource);
      if (h == held.end()) fail("rel of a resource not held");
      if (op.duration != SimTime{}) fail("rel must be instantaneous");
      held.erase(h);
      if (held.empty() && !last) fail("ops after the final rel");
      break;
    }
    case SysOpKind::exec:
      if (op.resource >= 0 && std::find(held.begin(), held.end(), op.resource) == held.end())
        fail("exec on a resource not held");
      break;
    case SysOpKind::write:
      if (held.empty() && !last) fail("write while holding nothing must be the last op");
      break;
    case SysOpKind::read:
      break;
    }
  }
  if (!held.empty()) fail("resources still held at the end");
}

} // namespace pipesim::engine
