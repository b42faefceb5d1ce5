#pragma once

#include <string>
#include <vector>

#include "pipesim/engine/executors.hpp"
#include "pipesim/error.hpp"
#include "pipesim/stats/model_file.hpp"
#include "pipesim/synth.hpp"

namespace pipesim::engine {

inline std::string train_model_name(Framework f) { return "train." + std::string(to_string(f)); }

/// Picks the engine's models out of a model set by their conventional
/// names: `assets`, `preprocess` (curve), `train.<Framework>`, `evaluate`.
/// Absent names stay empty.
inline EngineModels bind_models(const stats::ModelSet& set) {
  EngineModels m;
  auto gmm = [&](const std::string& name, std::size_t dim) -> std::optional<stats::GmmSampler> {
    const auto it = set.gmms.find(name);
    if (it == set.gmms.end()) return std::nullopt;
    if (it->second.dim() != dim)
      throw CorruptModel("mixture '" + name + "' has dimension " + std::to_string(it->second.dim()) + ", expected " +
                         std::to_string(dim));
    return stats::GmmSampler{it->second};
  };
  if (const auto it = set.curves.find("preprocess"); it != set.curves.end()) m.preprocess_curve = it->second;
  for (Framework f : kFrameworks) m.train[static_cast<std::size_t>(f)] = gmm(train_model_name(f), 1);
  m.evaluate = gmm("evaluate", 1);
  m.assets = gmm("assets", 3);
  return m;
}

/// Names of the models a run will need but does not have. Frameworks with
/// zero mix weight and a preprocess probability of zero need nothing.
inline std::vector<std::string> missing_models(const EngineModels& m, const synth::SynthConfig& cfg, bool synthesized_assets) {
  std::vector<std::string> out;
  if (synthesized_assets && !m.assets) out.emplace_back("assets");
  if (cfg.p_preprocess > 0 && !m.preprocess_curve) out.emplace_back("preprocess");
  for (Framework f : kFrameworks)
    if (cfg.framework_mix[static_cast<std::size_t>(f)] > 0 && !m.train[static_cast<std::size_t>(f)])
      out.push_back(train_model_name(f));
  if (!m.evaluate) out.emplace_back("evaluate");
  return out;
}

inline void require_models(const EngineModels& m, const synth::SynthConfig& cfg, bool synthesized_assets = true) {
  const auto missing = missing_models(m, cfg, synthesized_assets);
  if (missing.empty()) return;
  std::string list;
  for (const auto& n : missing) list += (list.empty() ? "" : ", ") + n;
  throw ModelMissing("model file lacks " + list);
}

} // namespace pipesim::engine
