#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pipesim/error.hpp"

namespace pipesim {

// ---------------------------------------------------------------- enums

enum class TaskType : std::uint8_t { preprocess, train, evaluate, compress, harden, deploy };
inline constexpr std::array<TaskType, 6> kTaskTypes{TaskType::preprocess, TaskType::train,    TaskType::evaluate,
                                                    TaskType::compress,   TaskType::harden,   TaskType::deploy};

enum class Framework : std::uint8_t { SparkML, TensorFlow, PyTorch, Caffe, Other };
inline constexpr std::array<Framework, 5> kFrameworks{Framework::SparkML, Framework::TensorFlow, Framework::PyTorch,
                                                      Framework::Caffe, Framework::Other};

enum class Estimator : std::uint8_t { logistic_regression, random_forest, neural_network };
inline constexpr std::array<Estimator, 3> kEstimators{Estimator::logistic_regression, Estimator::random_forest,
                                                      Estimator::neural_network};

enum class PredictionType : std::uint8_t { binary, multiclass, regression };
inline constexpr std::array<PredictionType, 3> kPredictionTypes{PredictionType::binary, PredictionType::multiclass,
                                                                PredictionType::regression};

enum class ResourceKind : std::uint8_t { compute, training, datastore };

/// System operations; every task executor is a sequence of these.
enum class SysOpKind : std::uint8_t { read, write, req, rel, exec };

inline std::string_view to_string(TaskType t) {
  constexpr std::array<std::string_view, 6> names{"preprocess", "train", "evaluate", "compress", "harden", "deploy"};
  return names[static_cast<std::size_t>(t)];
}
inline std::string_view to_string(Framework f) {
  constexpr std::array<std::string_view, 5> names{"SparkML", "TensorFlow", "PyTorch", "Caffe", "Other"};
  return names[static_cast<std::size_t>(f)];
}
inline std::string_view to_string(Estimator e) {
  constexpr std::array<std::string_view, 3> names{"logistic_regression", "random_forest", "neural_network"};
  return names[static_cast<std::size_t>(e)];
}
inline std::string_view to_string(PredictionType p) {
  constexpr std::array<std::string_view, 3> names{"binary", "multiclass", "regression"};
  return names[static_cast<std::size_t>(p)];
}
inline std::string_view to_string(ResourceKind k) {
  constexpr std::array<std::string_view, 3> names{"compute", "training", "datastore"};
  return names[static_cast<std::size_t>(k)];
}
inline std::string_view to_string(SysOpKind k) {
  constexpr std::array<std::string_view, 5> names{"read", "write", "req", "rel", "exec"};
  return names[static_cast<std::size_t>(k)];
}

namespace detail {
template <typename E, std::size_t N>
std::optional<E> parse_enum(std::string_view s, const std::array<E, N>& all) {
  for (E e : all)
    if (to_string(e) == s) return e;
  return std::nullopt;
}
} // namespace detail

inline std::optional<TaskType> parse_task_type(std::string_view s) { return detail::parse_enum(s, kTaskTypes); }
inline std::optional<Framework> parse_framework(std::string_view s) { return detail::parse_enum(s, kFrameworks); }
inline std::optional<Estimator> parse_estimator(std::string_view s) { return detail::parse_enum(s, kEstimators); }
inline std::optional<PredictionType> parse_prediction_type(std::string_view s) {
  return detail::parse_enum(s, kPredictionTypes);
}
inline std::optional<ResourceKind> parse_resource_kind(std::string_view s) {
  return detail::parse_enum(s, std::array{ResourceKind::compute, ResourceKind::training, ResourceKind::datastore});
}
inline std::optional<SysOpKind> parse_sysop(std::string_view s) {
  return detail::parse_enum(
      s, std::array{SysOpKind::read, SysOpKind::write, SysOpKind::req, SysOpKind::rel, SysOpKind::exec});
}

// ---------------------------------------------------------------- tasks and pipelines

struct PreprocessParams {
  std::uint64_t asset_ref = 0;
};
struct TrainParams {
  Framework framework = Framework::SparkML;
  std::uint64_t asset_ref = 0;
};
struct EvaluateParams {
  double quality_gate = 0.0; ///< minimum model performance to pass, in [0, 1]
};
struct CompressParams {
  double prune_level = 0.0; ///< fraction of weights pruned, in [0, 1]
};
struct HardenParams {};
struct DeployParams {};

using TaskParams = std::variant<PreprocessParams, TrainParams, EvaluateParams, CompressParams, HardenParams, DeployParams>;

/// A task instance. `params` must hold the alternative matching `type`.
struct TaskSpec {
  std::uint32_t id = 0;
  TaskType type = TaskType::deploy;
  TaskParams params = DeployParams{};

  bool params_match_type() const { return params.index() == static_cast<std::size_t>(type); }

  static TaskSpec preprocess(std::uint32_t id, std::uint64_t asset) { return {id, TaskType::preprocess, PreprocessParams{asset}}; }
  static TaskSpec train(std::uint32_t id, Framework f, std::uint64_t asset) { return {id, TaskType::train, TrainParams{f, asset}}; }
  static TaskSpec evaluate(std::uint32_t id, double gate) { return {id, TaskType::evaluate, EvaluateParams{gate}}; }
  static TaskSpec compress(std::uint32_t id, double prune) { return {id, TaskType::compress, CompressParams{prune}}; }
  static TaskSpec harden(std::uint32_t id) { return {id, TaskType::harden, HardenParams{}}; }
  static TaskSpec deploy(std::uint32_t id) { return {id, TaskType::deploy, DeployParams{}}; }
};

/// Directed graph of typed tasks; vertex ids are indices into `vertices`.
struct PipelineGraph {
  std::uint64_t id = 0;
  std::vector<TaskSpec> vertices;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  double arrival_time = 0.0; ///< simulation seconds

  /// Builds the chain v0 -> v1 -> ... from tasks in order, renumbering ids.
  static PipelineGraph chain(std::uint64_t id, std::vector<TaskSpec> tasks, double arrival = 0.0) {
    PipelineGraph g;
    g.id = id;
    g.arrival_time = arrival;
    for (std::uint32_t i = 0; i < tasks.size(); ++i) {
      tasks[i].id = i;
      if (i > 0) g.edges.emplace_back(i - 1, i);
    }
    g.vertices = std::move(tasks);
    return g;
  }
};

enum class ViolationKind {
  empty_graph,
  bad_edge,
  cycle,
  source_count,
  sink_count,
  ordering,
  deploy_not_sink,
  params_mismatch,
  bad_params,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

/// Kahn topological order, lowest id first among ready vertices. Returns
/// nullopt when the graph has a cycle or an out-of-range edge.
inline std::optional<std::vector<std::uint32_t>> topological_order(const PipelineGraph& g) {
  const auto n = static_cast<std::uint32_t>(g.vertices.size());
  std::vector<std::vector<std::uint32_t>> out(n);
  std::vector<std::uint32_t> indegree(n, 0);
  for (auto [a, b] : g.edges) {
    if (a >= n || b >= n) return std::nullopt;
    out[a].push_back(b);
    ++indegree[b];
  }
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (std::uint32_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push(v);
  std::vector<std::uint32_t> order;
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto w : out[v])
      if (--indegree[w] == 0) ready.push(w);
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

/// Every violated structural rule; an empty result means the graph is valid.
inline std::vector<Violation> validate_pipeline(const PipelineGraph& g) {
  std::vector<Violation> v;
  const auto n = static_cast<std::uint32_t>(g.vertices.size());
  if (n == 0) {
    v.push_back({ViolationKind::empty_graph, "pipeline has no tasks"});
    return v;
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto& t = g.vertices[i];
    if (t.id != i) v.push_back({ViolationKind::bad_edge, "vertex " + std::to_string(i) + " has id " + std::to_string(t.id)});
    if (!t.params_match_type()) {
      v.push_back({ViolationKind::params_mismatch, "task " + std::to_string(i) + " params do not match type " +
                                                       std::string(to_string(t.type))});
      continue;
    }
    if (const auto* e = std::get_if<EvaluateParams>(&t.params); e && !(e->quality_gate >= 0 && e->quality_gate <= 1))
      v.push_back({ViolationKind::bad_params, "quality gate outside [0, 1] on task " + std::to_string(i)});
    if (const auto* c = std::get_if<CompressParams>(&t.params); c && !(c->prune_level >= 0 && c->prune_level <= 1))
      v.push_back({ViolationKind::bad_params, "prune level outside [0, 1] on task " + std::to_string(i)});
  }

  std::vector<std::uint32_t> indeg(n, 0), outdeg(n, 0);
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (auto [a, b] : g.edges) {
    if (a >= n || b >= n || a == b) {
      if (a == b && a < n) v.push_back({ViolationKind::cycle, "self-loop on task " + std::to_string(a)});
      else v.push_back({ViolationKind::bad_edge, "edge references a missing task"});
      continue;
    }
    ++outdeg[a];
    ++indeg[b];
    adj[a].push_back(b);
  }
  const auto sources = std::count(indeg.begin(), indeg.end(), 0u);
  const auto sinks = std::count(outdeg.begin(), outdeg.end(), 0u);
  if (sources != 1) v.push_back({ViolationKind::source_count, "expected one source, found " + std::to_string(sources)});
  if (sinks != 1) v.push_back({ViolationKind::sink_count, "expected one sink, found " + std::to_string(sinks)});
  if (!topological_order(g)) v.push_back({ViolationKind::cycle, "pipeline graph has a cycle"});

  // Reachability from training tasks.
  std::vector<bool> after_train(n, false);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t i = 0; i < n; ++i)
    if (g.vertices[i].type == TaskType::train) stack.push_back(i);
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto w : adj[u])
      if (!after_train[w]) {
        after_train[w] = true;
        stack.push_back(w);
      }
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto t = g.vertices[i].type;
    if ((t == TaskType::evaluate || t == TaskType::compress || t == TaskType::harden) && !after_train[i])
      v.push_back({ViolationKind::ordering, std::string(to_string(t)) + " task " + std::to_string(i) +
                                                " is not preceded by a train task"});
    if (t == TaskType::deploy && outdeg[i] != 0)
      v.push_back({ViolationKind::deploy_not_sink, "deploy task " + std::to_string(i) + " is not the sink"});
  }
  return v;
}

// ---------------------------------------------------------------- assets and resources

struct DataAsset {
  std::uint64_t id = 0;
  std::uint64_t cols = 2;   ///< dimensions
  std::uint64_t rows = 50;  ///< instances
  std::uint64_t bytes = 1;

  static constexpr std::uint64_t kMinRows = 50;
  static constexpr std::uint64_t kMinCols = 2;

  bool valid() const { return cols >= kMinCols && rows >= kMinRows && bytes > 0; }
  double cells() const { return static_cast<double>(rows) * static_cast<double>(cols); }
};

struct TrainedModel {
  std::uint64_t id = 0;
  std::uint32_t version = 1;
  PredictionType prediction_type = PredictionType::binary;
  Estimator estimator = Estimator::logistic_regression;
  Framework framework = Framework::SparkML;
  double performance = 0.0;  ///< in [0, 1]
  double clever_score = 0.0; ///< >= 0
  double size_bytes = 0.0;
  double inference_ms = 0.0;
  std::uint64_t lineage = 0; ///< originating pipeline
  double new_data_fraction = 0.0;
};

/// Service point with `capacity` concurrent jobs (compute/training) or a
/// data store characterized by bandwidth and latency.
struct Resource {
  std::string name;
  ResourceKind kind = ResourceKind::compute;
  std::uint32_t capacity = 1;
  double bandwidth_bytes_per_s = 0.0;
  double latency_s = 0.0;

  void validate() const {
    if (name.empty()) throw InvalidArgument("resource needs a name");
    if (kind == ResourceKind::datastore) {
      if (!(bandwidth_bytes_per_s > 0)) throw InvalidArgument("datastore '" + name + "' needs bandwidth > 0");
      if (!(latency_s >= 0)) throw InvalidArgument("datastore '" + name + "' needs latency >= 0");
    } else if (capacity < 1) {
      throw InvalidArgument("resource '" + name + "' needs capacity >= 1");
    }
  }

  /// Transfer time of `bytes` through a datastore.
  double transfer_seconds(double bytes) const { return latency_s + bytes / bandwidth_bytes_per_s; }
};

// ---------------------------------------------------------------- retraining potential

/// w_perf * (1 - performance) + w_data * new_data_fraction, clamped to [0, 1].
/// Weights must be non-negative and sum to one.
inline double potential_improvement(const TrainedModel& m, double w_perf = 0.5, double w_data = 0.5) {
  if (!(w_perf >= 0) || !(w_data >= 0) || std::abs(w_perf + w_data - 1.0) > 1e-9)
    throw InvalidArgument("potential weights must be non-negative and sum to 1");
  const double p = std::clamp(m.performance, 0.0, 1.0);
  const double d = std::clamp(m.new_data_fraction, 0.0, 1.0);
  return std::clamp(w_perf * (1.0 - p) + w_data * d, 0.0, 1.0);
}

} // namespace pipesim
