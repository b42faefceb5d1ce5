#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "pipesim/domain.hpp"
#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"
#include "pipesim/stats/distribution.hpp"
#include "pipesim/stats/gmm.hpp"

namespace pipesim::synth {

using stats::Distribution;

/// Distributions of the metric values materialized for a trained model of
/// one estimator type.
struct MetricModel {
  Distribution performance = Distribution::beta(8.0, 2.0);
  Distribution size_bytes = Distribution::lognormal(std::log(5e6), 1.0);
  Distribution inference_ms = Distribution::lognormal(std::log(20.0), 0.5);
  Distribution clever_score = Distribution::lognormal(std::log(0.5), 0.5);
};

struct SynthConfig {
  /// Indexed by Framework.
  std::array<double, 5> framework_mix{0.63, 0.32, 0.03, 0.01, 0.01};
  double p_preprocess = 0.7;
  double p_compress = 0.1;
  double p_harden = 0.05;
  double quality_gate_default = 0.7;
  std::vector<double> prune_levels{0.2, 0.4, 0.6, 0.8};
  /// Estimator mix for frameworks that are not deep-learning frameworks.
  std::array<double, 3> estimator_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<double, 3> prediction_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};
  /// Indexed by Estimator.
  std::array<MetricModel, 3> performance_model{};

  void validate() const {
    auto check_mix = [](const auto& mix, const char* what) {
      double sum = 0.0;
      for (double p : mix) {
        if (!(p >= 0 && p <= 1)) throw ConfigInvalid(std::string(what) + " entries must lie in [0, 1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw ConfigInvalid(std::string(what) + " must sum to 1, sums to " + std::to_string(sum));
    };
    check_mix(framework_mix, "framework mix");
    check_mix(estimator_mix, "estimator mix");
    check_mix(prediction_mix, "prediction type mix");
    for (double p : {p_preprocess, p_compress, p_harden, quality_gate_default})
      if (!(p >= 0 && p <= 1)) throw ConfigInvalid("synth probabilities and the quality gate must lie in [0, 1]");
    if (prune_levels.empty()) throw ConfigInvalid("prune_levels must not be empty");
    for (double p : prune_levels)
      if (!(p >= 0 && p <= 0.8)) throw ConfigInvalid("prune levels must lie in [0, 0.8]");
    for (const auto& m : performance_model) {
      m.performance.validate();
      m.size_bytes.validate();
      m.inference_ms.validate();
      m.clever_score.validate();
    }
  }
};

/// Index drawn from a probability vector by inverse CDF on one uniform.
template <std::size_t N>
std::size_t draw_index(const std::array<double, N>& probs, Rng& rng) {
  double u = uniform01(rng);
  for (std::size_t i = 0; i < N; ++i) {
    if (u < probs[i]) return i;
    u -= probs[i];
  }
  // Rounding slack: fall back to the last entry with mass.
  for (std::size_t i = N; i-- > 0;)
    if (probs[i] > 0) return i;
  return N - 1;
}

inline bool bernoulli(double p, Rng& rng) { return uniform01(rng) < p; }

/// Template: [preprocess] -> train -> evaluate -> [compress] -> [harden] -> deploy.
inline PipelineGraph synth_pipeline(const SynthConfig& cfg, Rng& rng, std::uint64_t id = 0, double arrival = 0.0) {
  std::vector<TaskSpec> tasks;
  if (bernoulli(cfg.p_preprocess, rng)) tasks.push_back(TaskSpec::preprocess(0, id));
  const auto framework = kFrameworks[draw_index(cfg.framework_mix, rng)];
  tasks.push_back(TaskSpec::train(0, framework, id));
  tasks.push_back(TaskSpec::evaluate(0, cfg.quality_gate_default));
  if (bernoulli(cfg.p_compress, rng)) {
    const auto level = cfg.prune_levels[static_cast<std::size_t>(rng() % cfg.prune_levels.size())];
    tasks.push_back(TaskSpec::compress(0, level));
  }
  if (bernoulli(cfg.p_harden, rng)) tasks.push_back(TaskSpec::harden(0));
  tasks.push_back(TaskSpec::deploy(0));
  return PipelineGraph::chain(id, std::move(tasks), arrival);
}

inline std::uint64_t round_half_up(double v) {
  const double r = std::floor(v + 0.5);
  if (!(r >= 0)) return 0;
  if (r >= 1.8e19) return UINT64_MAX;
  return static_cast<std::uint64_t>(r);
}

/// Draws (ln rows, ln cols, ln bytes) from the asset mixture, maps back to
/// linear space and rejects draws below the 50-row / 2-column floor or
/// outside the mixture bounds, up to 1,000 attempts in total.
inline DataAsset synth_data_asset(const stats::GmmSampler& assets, Rng& rng, std::uint64_t id = 0) {
  if (assets.model().dim() != 3) throw InvalidArgument("asset mixture must be 3-dimensional (ln rows, ln cols, ln bytes)");
  for (int attempt = 0; attempt < stats::kMaxRejectionAttempts; ++attempt) {
    const auto x = assets.sample_unbounded(rng);
    if (!assets.inside(x)) continue;
    DataAsset a;
    a.id = id;
    a.rows = round_half_up(std::exp(x(0)));
    a.cols = round_half_up(std::exp(x(1)));
    a.bytes = round_half_up(std::exp(x(2)));
    if (a.valid()) return a;
  }
  throw RejectionExhausted("no asset draw met the 50-row / 2-column floor in " +
                           std::to_string(stats::kMaxRejectionAttempts) + " attempts");
}

inline bool is_deep_learning(Framework f) {
  return f == Framework::TensorFlow || f == Framework::PyTorch || f == Framework::Caffe;
}

/// Version-1 model produced by a train task. Deep-learning frameworks always
/// yield neural networks; other frameworks draw from the estimator mix.
inline TrainedModel materialize_model(const TaskSpec& task, const DataAsset& asset, const SynthConfig& cfg, Rng& rng,
                                      std::uint64_t lineage = 0) {
  const auto* params = std::get_if<TrainParams>(&task.params);
  if (task.type != TaskType::train || !params) throw InvalidArgument("materialize_model needs a train task");
  TrainedModel m;
  m.id = lineage;
  m.version = 1;
  m.lineage = lineage;
  m.framework = params->framework;
  m.estimator = is_deep_learning(params->framework) ? Estimator::neural_network
                                                     : kEstimators[draw_index(cfg.estimator_mix, rng)];
  m.prediction_type = kPredictionTypes[draw_index(cfg.prediction_mix, rng)];
  const auto& metrics = cfg.performance_model[static_cast<std::size_t>(m.estimator)];
  m.performance = std::clamp(metrics.performance.sample(rng), 0.0, 1.0);
  m.size_bytes = std::max(1.0, metrics.size_bytes.sample(rng));
  m.inference_ms = std::max(0.0, metrics.inference_ms.sample(rng));
  m.clever_score = std::max(0.0, metrics.clever_score.sample(rng));
  (void)asset;
  return m;
}

} // namespace pipesim::synth
