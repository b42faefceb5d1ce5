#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "pipesim/domain.hpp"
#include "pipesim/error.hpp"

namespace pipesim::engine {

/// Measured effect of weight pruning on one reference network: top-1
/// accuracy (%), model size (MB) and inference time (ms) at each prune level.
struct CompressionProfile {
  std::string_view name;
  std::array<double, 5> prune{0.0, 0.2, 0.4, 0.6, 0.8};
  std::array<double, 5> accuracy;
  std::array<double, 5> size_mb;
  std::array<double, 5> inference_ms;

  struct Multipliers {
    double accuracy = 1.0;
    double size = 1.0;
    double inference = 1.0;
  };

  /// Ratios row(level) / row(0), linearly interpolated between grid points.
  Multipliers multipliers(double level) const {
    if (!(level >= prune.front() && level <= prune.back()))
      throw PruneOutOfRange("prune level " + std::to_string(level) + " outside [0, 0.8]");
    std::size_t i = 0;
    while (i + 2 < prune.size() && level > prune[i + 1]) ++i;
    const double w = (level - prune[i]) / (prune[i + 1] - prune[i]);
    auto at = [&](const std::array<double, 5>& row) {
      if (level == prune[i]) return row[i];
      if (level == prune[i + 1]) return row[i + 1];
      return row[i] + w * (row[i + 1] - row[i]);
    };
    return {at(accuracy) / accuracy[0], at(size_mb) / size_mb[0], at(inference_ms) / inference_ms[0]};
  }
};

inline const CompressionProfile& googlenet_profile() {
  static const CompressionProfile p{"googlenet",
                                    {0.0, 0.2, 0.4, 0.6, 0.8},
                                    {80.7, 80.9, 80.0, 77.7, 69.8},
                                    {42.5, 28.7, 20.9, 14.6, 8.5},
                                    {128, 117, 100, 84, 71}};
  return p;
}

inline const CompressionProfile& resnet50_profile() {
  static const CompressionProfile p{"resnet50",
                                    {0.0, 0.2, 0.4, 0.6, 0.8},
                                    {81.3, 80.9, 80.8, 79.5, 69.8},
                                    {91.1, 83.5, 65.2, 41.9, 8.5},
                                    {223, 200, 169, 141, 72}};
  return p;
}

inline std::optional<const CompressionProfile*> find_compression_profile(std::string_view name) {
  if (name == "googlenet") return &googlenet_profile();
  if (name == "resnet50") return &resnet50_profile();
  return std::nullopt;
}

/// New model version with metrics scaled by the profile's ratios. Accuracy
/// is capped at 1 since a few grid points sit slightly above row 0.
inline TrainedModel apply_compression(const TrainedModel& m, double prune_level,
                                      const CompressionProfile& profile = googlenet_profile()) {
  const auto k = profile.multipliers(prune_level);
  TrainedModel out = m;
  out.version = m.version + 1;
  out.performance = std::min(1.0, m.performance * k.accuracy);
  out.size_bytes = m.size_bytes * k.size;
  out.inference_ms = m.inference_ms * k.inference;
  return out;
}

} // namespace pipesim::engine
