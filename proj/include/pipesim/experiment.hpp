#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "pipesim/config.hpp"
#include "pipesim/engine/arrivals.hpp"
#include "pipesim/engine/models.hpp"
#include "pipesim/engine/simulation.hpp"
#include "pipesim/error.hpp"
#include "pipesim/stats/model_file.hpp"
#include "pipesim/text.hpp"
#include "pipesim/trace/record.hpp"

namespace pipesim {

/// A parsed config bound to its models, ready to spawn simulations. Owns
/// the samplers the simulations point into, so it must outlive them.
class Experiment {
public:
  Experiment(ExperimentConfig cfg, stats::ModelSet models) : cfg_{std::move(cfg)}, set_{std::move(models)} {
    cfg_.validate();
    bound_ = engine::bind_models(set_);
    engine::require_models(bound_, cfg_.synth, true);
    if (cfg_.arrival.mode == ArrivalMode::profile) {
      const auto it = set_.profiles.find(cfg_.arrival.profile);
      if (it == set_.profiles.end()) throw ModelMissing("model file lacks arrival profile '" + cfg_.arrival.profile + "'");
      profile_ = it->second;
      if (cfg_.tz_offset_s) profile_->tz_offset_s = static_cast<double>(*cfg_.tz_offset_s);
    }
  }

  static Experiment load(const std::filesystem::path& config_path) {
    auto cfg = load_config(config_path);
    auto models = stats::load_model_file(cfg.models.string());
    return Experiment{std::move(cfg), std::move(models)};
  }

  const ExperimentConfig& config() const { return cfg_; }
  const engine::EngineModels& models() const { return bound_; }
  const stats::ModelSet& model_set() const { return set_; }

  std::int64_t tz_offset_s() const {
    if (profile_) return static_cast<std::int64_t>(profile_->tz_offset_s);
    return cfg_.tz_offset_s.value_or(0);
  }

  engine::EngineConfig engine_config(std::uint64_t seed) const {
    auto c = cfg_.engine_config(seed);
    c.tz_offset_s = tz_offset_s();
    return c;
  }

  std::unique_ptr<engine::ArrivalSource> arrivals() const {
    if (profile_) return std::make_unique<engine::ProfileArrivals>(*profile_, cfg_.epoch, cfg_.arrival.factor);
    return std::make_unique<engine::FixedArrivals>(cfg_.arrival.interarrival, cfg_.arrival.factor);
  }

  std::unique_ptr<engine::Simulation> simulation(std::uint64_t seed,
                                                 engine::ExecutorRegistry registry = engine::ExecutorRegistry::defaults()) const {
    return simulation(engine_config(seed), std::move(registry));
  }

  std::unique_ptr<engine::Simulation> simulation(engine::EngineConfig ec,
                                                 engine::ExecutorRegistry registry = engine::ExecutorRegistry::defaults()) const {
    return std::make_unique<engine::Simulation>(std::move(ec), bound_, cfg_.synth, std::move(registry), arrivals(),
                                                std::make_unique<engine::SynthPipelineSource>(cfg_.synth, &*bound_.assets));
  }

private:
  ExperimentConfig cfg_;
  stats::ModelSet set_;
  engine::EngineModels bound_;
  std::optional<stats::ArrivalProfile> profile_;
};

/// Writes one CSV row per model version and per deploy.
class LineageCsv final : public engine::RunObserver {
public:
  explicit LineageCsv(const std::filesystem::path& path) : f_{std::fopen(path.string().c_str(), "w")} {
    if (!f_) throw IoFailure("cannot open " + path.string() + " for writing");
    std::fputs("lineage,version,event,t_s,framework,estimator,performance,size_bytes,inference_ms,clever_score,"
               "new_data_fraction,potential\n",
               f_);
  }
  ~LineageCsv() override {
    if (f_) std::fclose(f_);
  }
  LineageCsv(const LineageCsv&) = delete;
  LineageCsv& operator=(const LineageCsv&) = delete;

  void on_model(const TrainedModel& m, SimTime at) override { row(m, "model", at, std::nullopt); }
  void on_deploy(const TrainedModel& m, SimTime at, double potential) override { row(m, "deploy", at, potential); }

  void close() {
    if (f_ && std::fclose(f_) != 0) {
      f_ = nullptr;
      throw IoFailure("failed to close lineage csv");
    }
    f_ = nullptr;
  }

private:
  void row(const TrainedModel& m, const char* event, SimTime at, std::optional<double> potential) {
    std::string t;
    trace::detail::append_time(t, at);
    std::string line = std::to_string(m.lineage) + "," + std::to_string(m.version) + "," + event + "," + t + "," +
                       std::string(to_string(m.framework)) + "," +
                       std::string(to_string(m.estimator)) + "," + text::format_real(m.performance) + "," +
                       text::format_real(m.size_bytes) + "," + text::format_real(m.inference_ms) + "," +
                       text::format_real(m.clever_score) + "," + text::format_real(m.new_data_fraction) + "," +
                       (potential ? text::format_real(*potential) : std::string{}) + "\n";
    if (std::fputs(line.c_str(), f_) < 0) throw IoFailure("lineage csv write failed");
  }

  std::FILE* f_;
};

} // namespace pipesim
