#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pipesim/domain.hpp"
#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"
#include "pipesim/sim_time.hpp"
#include "pipesim/stats/arrival.hpp"
#include "pipesim/stats/distribution.hpp"
#include "pipesim/stats/gmm.hpp"
#include "pipesim/synth.hpp"

namespace pipesim::engine {

/// Produces strictly increasing pipeline arrival times.
class ArrivalSource {
public:
  virtual ~ArrivalSource() = default;
  /// Next arrival after `previous`, or the first one when it is empty.
  virtual std::optional<SimTime> next(std::optional<SimTime> previous, Rng& rng) = 0;
};

namespace detail {
inline SimTime step_after(SimTime prev, double seconds) {
  auto dt = SimTime::from_seconds(seconds);
  if (dt <= SimTime{}) dt = SimTime::from_micros(1); // keeps arrivals strictly increasing
  return prev + dt;
}
} // namespace detail

/// Stationary arrivals: the first at t = 0, then i.i.d. interarrivals.
class FixedArrivals final : public ArrivalSource {
public:
  explicit FixedArrivals(stats::Distribution interarrival, double factor = 1.0) : d_{interarrival}, factor_{factor} {
    d_.validate();
    if (!(factor > 0)) throw ConfigInvalid("interarrival factor must be > 0");
    if (!(d_.mean() > 0)) throw ConfigInvalid("interarrival distribution needs a positive mean");
  }

  std::optional<SimTime> next(std::optional<SimTime> prev, Rng& rng) override {
    if (!prev) return SimTime{};
    return detail::step_after(*prev, d_.sample(rng) * factor_);
  }

private:
  stats::Distribution d_;
  double factor_;
};

/// Interarrivals drawn from the weekday/hour cluster of the wall-clock time
/// of the previous arrival.
class ProfileArrivals final : public ArrivalSource {
public:
  ProfileArrivals(stats::ArrivalProfile profile, double epoch_anchor, double factor = 1.0)
      : profile_{std::move(profile)}, epoch_{epoch_anchor}, factor_{factor} {
    profile_.validate();
    if (!(factor > 0)) throw ConfigInvalid("interarrival factor must be > 0");
  }

  std::optional<SimTime> next(std::optional<SimTime> prev, Rng& rng) override {
    if (!prev) return SimTime{};
    const double d = stats::sample_interarrival(profile_, epoch_ + prev->seconds(), rng);
    return detail::step_after(*prev, d * factor_);
  }

private:
  stats::ArrivalProfile profile_;
  double epoch_;
  double factor_;
};

/// Replays a fixed list of arrival times.
class ScriptedArrivals final : public ArrivalSource {
public:
  explicit ScriptedArrivals(std::vector<double> times_s) {
    for (double t : times_s) {
      const auto st = SimTime::from_seconds(t);
      if (!times_.empty() && st <= times_.back()) throw InvalidArgument("scripted arrivals must be strictly increasing");
      times_.push_back(st);
    }
  }

  std::optional<SimTime> next(std::optional<SimTime>, Rng&) override {
    if (i_ >= times_.size()) return std::nullopt;
    return times_[i_++];
  }

private:
  std::vector<SimTime> times_;
  std::size_t i_ = 0;
};

/// Materializes every arrival in [0, horizon).
inline std::vector<SimTime> arrival_times(ArrivalSource& src, SimTime horizon, Rng& rng) {
  std::vector<SimTime> out;
  std::optional<SimTime> prev;
  while (auto t = src.next(prev, rng)) {
    if (*t >= horizon) break;
    out.push_back(*t);
    prev = t;
  }
  return out;
}

// ---------------------------------------------------------------- pipeline sources

struct PipelineJob {
  PipelineGraph graph;
  DataAsset asset;
};

/// Builds the pipeline that enters at each arrival.
class PipelineSource {
public:
  virtual ~PipelineSource() = default;
  virtual PipelineJob make(std::uint64_t id, SimTime arrival, RngStreams& rng) = 0;
};

class SynthPipelineSource final : public PipelineSource {
public:
  SynthPipelineSource(synth::SynthConfig cfg, const stats::GmmSampler* assets) : cfg_{std::move(cfg)}, assets_{assets} {
    cfg_.validate();
    if (!assets_) throw ModelMissing("asset mixture is required for synthesized pipelines");
  }

  PipelineJob make(std::uint64_t id, SimTime arrival, RngStreams& rng) override {
    PipelineJob job;
    job.graph = synth::synth_pipeline(cfg_, rng.pipelines, id, arrival.seconds());
    job.asset = synth::synth_data_asset(*assets_, rng.assets, id);
    return job;
  }

  const synth::SynthConfig& config() const { return cfg_; }

private:
  synth::SynthConfig cfg_;
  const stats::GmmSampler* assets_;
};

/// Every arrival runs a copy of one template on one asset.
class FixedPipelineSource final : public PipelineSource {
public:
  FixedPipelineSource(std::vector<TaskSpec> tasks, DataAsset asset) : tasks_{std::move(tasks)}, asset_{asset} {}

  PipelineJob make(std::uint64_t id, SimTime arrival, RngStreams&) override {
    PipelineJob job;
    job.graph = PipelineGraph::chain(id, tasks_, arrival.seconds());
    job.asset = asset_;
    job.asset.id = id;
    return job;
  }

private:
  std::vector<TaskSpec> tasks_;
  DataAsset asset_;
};

} // namespace pipesim::engine
