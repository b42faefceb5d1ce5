#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pipesim/config.hpp"
#include "pipesim/engine/arrivals.hpp"
#include "pipesim/engine/models.hpp"
#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"
#include "pipesim/synth.hpp"

namespace pipesim {

/// Metrics model_reference can draw directly.
inline const std::vector<std::string>& reference_metrics() {
  static const std::vector<std::string> m{"train_duration", "evaluate_duration", "preprocess_duration", "interarrival"};
  return m;
}

/// Draws `n` values of `metric` from the models alone, without queueing:
/// what the simulator should reproduce for that metric.
///
///  - train_duration: framework by the synth mix, then its ln-seconds mixture
///  - evaluate_duration: the evaluate mixture
///  - preprocess_duration: an asset from the asset mixture through the curve,
///    times the noise factor when `preprocess_noise`
///  - interarrival: the configured arrival source, with profile mode walking the calendar
///    from `epoch`
inline std::vector<double> model_reference(const std::string& metric, const stats::ModelSet& set,
                                           const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
  const auto models = engine::bind_models(set);
  Rng rng = make_stream(seed, "reference");
  std::vector<double> out;
  out.reserve(n);
  auto draw_log = [&](const std::optional<stats::GmmSampler>& s, const std::string& name) {
    if (!s) throw ModelMissing("model file lacks " + name);
    return std::exp(s->sample(rng)(0));
  };
  // Durations go through the same microsecond rounding as the engine.
  auto us = [](double s) { return SimTime::from_seconds(s).seconds(); };

  if (metric == "train_duration" || metric == "train_exec") {
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = static_cast<std::size_t>(synth::draw_index(cfg.synth.framework_mix, rng));
      out.push_back(us(draw_log(models.train[f], engine::train_model_name(kFrameworks[f]))));
    }
  } else if (metric == "evaluate_duration" || metric == "evaluate_exec") {
    for (std::size_t i = 0; i < n; ++i) out.push_back(us(draw_log(models.evaluate, "evaluate")));
  } else if (metric == "preprocess_duration" || metric == "preprocess_exec") {
    if (!models.preprocess_curve) throw ModelMissing("model file lacks preprocess");
    if (!models.assets) throw ModelMissing("model file lacks assets");
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = synth::synth_data_asset(*models.assets, rng);
      double s = models.preprocess_curve->deterministic_seconds(a.cells());
      if (cfg.preprocess_noise) s *= models.preprocess_curve->noise_factor(rng);
      out.push_back(us(s));
    }
  } else if (metric == "interarrival") {
    std::unique_ptr<engine::ArrivalSource> src;
    if (cfg.arrival.mode == ArrivalMode::profile) {
      const auto it = set.profiles.find(cfg.arrival.profile);
      if (it == set.profiles.end()) throw ModelMissing("model file lacks arrival profile '" + cfg.arrival.profile + "'");
      auto p = it->second;
      if (cfg.tz_offset_s) p.tz_offset_s = static_cast<double>(*cfg.tz_offset_s);
      src = std::make_unique<engine::ProfileArrivals>(p, cfg.epoch, cfg.arrival.factor);
    } else {
      src = std::make_unique<engine::FixedArrivals>(cfg.arrival.interarrival, cfg.arrival.factor);
    }
    std::optional<SimTime> prev = src->next(std::nullopt, rng);
    while (out.size() < n) {
      const auto t = src->next(prev, rng);
      out.push_back((*t - *prev).seconds());
      prev = t;
    }
  } else {
    throw InvalidArgument("no model reference for metric '" + metric + "'");
  }
  return out;
}

} // namespace pipesim
