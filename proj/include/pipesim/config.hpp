#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pipesim/domain.hpp"
#include "pipesim/engine/compression.hpp"
#include "pipesim/engine/simulation.hpp"
#include "pipesim/error.hpp"
#include "pipesim/stats/distribution.hpp"
#include "pipesim/synth.hpp"
#include "pipesim/text.hpp"

namespace pipesim {

enum class ArrivalMode : std::uint8_t { fixed, profile };

struct ArrivalSpec {
  ArrivalMode mode = ArrivalMode::fixed;
  stats::Distribution interarrival = stats::Distribution::exponential(1.0 / 44.0);
  std::string profile = "default"; ///< model-file profile name in profile mode
  double factor = 1.0;             ///< multiplies every interarrival
};

/// Everything one experiment needs. Parsed from an INI file with sections
/// [experiment], [arrival], [resource.<name>], [synth] and [engine].
struct ExperimentConfig {
  std::string run_id = "run";
  std::uint64_t seed = 1;
  double horizon_s = 0.0;
  double epoch = 1704067200.0;
  /// Local-time offset; in profile mode it defaults to the profile's own.
  std::optional<std::int64_t> tz_offset_s;
  std::filesystem::path models;     ///< resolved against the config file's directory
  std::filesystem::path output_dir = "out";
  bool write_trace = true;
  bool progress = true;
  ArrivalSpec arrival;
  std::vector<Resource> resources;
  synth::SynthConfig synth;
  std::array<std::string, 6> task_resource{"compute", "training", "compute", "training", "training", ""};
  std::string datastore = "datastore";
  double network_overhead = 1.05;
  double fresh_data_tau_s = 30.0 * 86400.0;
  double potential_w_perf = 0.5;
  std::string compression_profile = "googlenet";
  double compression_sigma = 0.1;
  bool preprocess_noise = true;
  double harden_clever_bump = 0.1;

  void validate() const {
    if (!(horizon_s > 0) || !std::isfinite(horizon_s)) throw ConfigInvalid("horizon must be > 0 seconds");
    if (!(arrival.factor > 0) || !std::isfinite(arrival.factor)) throw ConfigInvalid("interarrival factor must be > 0");
    if (arrival.mode == ArrivalMode::fixed && !(arrival.interarrival.mean() > 0))
      throw ConfigInvalid("interarrival distribution needs a positive mean");
    if (models.empty()) throw ConfigInvalid("[experiment] models is required");
    if (resources.empty()) throw ConfigInvalid("at least one [resource.<name>] section is required");
    if (!engine::find_compression_profile(compression_profile))
      throw ConfigInvalid("unknown compression profile '" + compression_profile + "'");
    synth.validate();
    engine_config().validate();
    auto find = [&](const std::string& name) -> const Resource* {
      for (const auto& r : resources)
        if (r.name == name) return &r;
      return nullptr;
    };
    for (TaskType t : kTaskTypes) {
      const auto& name = task_resource[static_cast<std::size_t>(t)];
      if (name.empty()) continue;
      const auto* r = find(name);
      if (!r) throw ConfigInvalid("resource '" + name + "' for " + std::string(to_string(t)) + " tasks is not defined");
      if (r->kind == ResourceKind::datastore)
        throw ConfigInvalid(std::string(to_string(t)) + " tasks cannot run on datastore " + name);
    }
    if (!datastore.empty()) {
      const auto* ds = find(datastore);
      if (!ds || ds->kind != ResourceKind::datastore) throw ConfigInvalid("datastore '" + datastore + "' is not a defined datastore");
    }
  }

  /// Engine settings for one replication; `seed` defaults to the config seed.
  engine::EngineConfig engine_config(std::optional<std::uint64_t> seed_override = std::nullopt) const {
    engine::EngineConfig c;
    c.run_id = run_id;
    c.seed = seed_override.value_or(seed);
    c.horizon = SimTime::from_seconds(horizon_s);
    c.epoch_anchor = epoch;
    c.tz_offset_s = tz_offset_s.value_or(0);
    c.resources = resources;
    c.task_resource = task_resource;
    c.datastore = datastore;
    c.network_overhead = network_overhead;
    c.fresh_data_tau_s = fresh_data_tau_s;
    c.potential_w_perf = potential_w_perf;
    c.exec.compression_sigma = compression_sigma;
    c.exec.compression = engine::find_compression_profile(compression_profile).value_or(nullptr);
    c.exec.preprocess_noise = preprocess_noise;
    c.exec.harden_clever_bump = harden_clever_bump;
    return c;
  }
};

namespace detail {

using Ptree = boost::property_tree::ptree;

/// Reads the keys of one section, rejecting any that nobody consumed.
class SectionReader {
public:
  SectionReader(std::string name, const Ptree& tree) : name_{std::move(name)} {
    for (const auto& [k, v] : tree) {
      if (!v.empty()) throw ConfigInvalid("[" + name_ + "] nested key '" + k + "'");
      values_[k] = v.data();
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> raw(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  template <class F>
  void with(const std::string& key, F&& f) {
    if (auto v = raw(key)) {
      try {
        f(*v);
      } catch (const ConfigInvalid&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigInvalid("[" + name_ + "] " + key + ": " + e.what());
      }
    }
  }

  void real(const std::string& key, double& out) {
    with(key, [&](const std::string& v) { out = number(key, v); });
  }

  /// Reads `key` in some unit and stores it multiplied into seconds.
  void scaled(const std::string& key, double unit, double& out) {
    with(key, [&](const std::string& v) { out = number(key, v) * unit; });
  }

  void uint(const std::string& key, std::uint64_t& out) {
    with(key, [&](const std::string& v) {
      const double d = number(key, v);
      if (d < 0 || d != std::floor(d) || d > 1.8e19) fail(key, "'" + v + "' is not a non-negative integer");
      // Parse the text itself so large seeds keep every digit.
      std::size_t pos = 0;
      out = std::stoull(v, &pos);
      if (pos != v.size()) fail(key, "'" + v + "' is not a non-negative integer");
    });
  }

  void boolean(const std::string& key, bool& out) {
    with(key, [&](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes") out = true;
      else if (v == "false" || v == "0" || v == "no") out = false;
      else fail(key, "'" + v + "' is not a boolean");
    });
  }

  void string(const std::string& key, std::string& out) {
    with(key, [&](const std::string& v) { out = v; });
  }

  void distribution(const std::string& key, stats::Distribution& out) {
    with(key, [&](const std::string& v) { out = stats::Distribution::parse(v); });
  }

  template <std::size_t N>
  void reals(const std::string& key, std::array<double, N>& out) {
    with(key, [&](const std::string& v) {
      const auto xs = text::parse_reals(v);
      if (!xs || xs->size() != N) fail(key, "expected " + std::to_string(N) + " comma-separated numbers");
      std::copy(xs->begin(), xs->end(), out.begin());
    });
  }

  void reals(const std::string& key, std::vector<double>& out) {
    with(key, [&](const std::string& v) {
      const auto xs = text::parse_reals(v);
      if (!xs || xs->empty()) fail(key, "expected comma-separated numbers");
      out = *xs;
    });
  }

  /// Fails closed: any key that no reader asked for is a typo.
  void finish() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw ConfigInvalid("[" + name_ + "] unknown key '" + k + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigInvalid("[" + name_ + "] " + key + ": " + why);
  }

private:
  double number(const std::string& key, const std::string& v) const {
    const auto d = text::parse_double(v);
    if (!d) fail(key, "'" + v + "' is not a number");
    return *d;
  }

  std::string name_;
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

inline void read_experiment(SectionReader& s, ExperimentConfig& c, const std::filesystem::path& base) {
  s.string("run_id", c.run_id);
  s.uint("seed", c.seed);
  if (s.has("horizon_s") && s.has("horizon_days")) s.fail("horizon_days", "give horizon_s or horizon_days, not both");
  s.real("horizon_s", c.horizon_s);
  s.scaled("horizon_days", 86400.0, c.horizon_s);
  s.real("epoch", c.epoch);
  s.with("tz_offset_s", [&](const std::string& v) {
    const auto d = text::parse_double(v);
    if (!d || *d != std::floor(*d)) s.fail("tz_offset_s", "expected whole seconds");
    c.tz_offset_s = static_cast<std::int64_t>(*d);
  });
  s.with("models", [&](const std::string& v) {
    std::filesystem::path p{v};
    c.models = p.is_absolute() ? p : (base / p).lexically_normal();
  });
  s.with("output_dir", [&](const std::string& v) { c.output_dir = v; });
  s.boolean("trace", c.write_trace);
  s.boolean("progress", c.progress);
}

inline void read_arrival(SectionReader& s, ArrivalSpec& a) {
  s.with("mode", [&](const std::string& v) {
    if (v == "fixed") a.mode = ArrivalMode::fixed;
    else if (v == "profile") a.mode = ArrivalMode::profile;
    else s.fail("mode", "expected fixed or profile, got '" + v + "'");
  });
  if (s.has("interarrival") && s.has("mean_interarrival_s"))
    s.fail("mean_interarrival_s", "give interarrival or mean_interarrival_s, not both");
  s.distribution("interarrival", a.interarrival);
  s.with("mean_interarrival_s", [&](const std::string& v) {
    const auto d = text::parse_double(v);
    if (!d || !(*d > 0)) s.fail("mean_interarrival_s", "expected a positive number");
    a.interarrival = stats::Distribution::exponential(1.0 / *d);
  });
  s.string("profile", a.profile);
  s.real("factor", a.factor);
}

inline Resource read_resource(SectionReader& s, const std::string& name) {
  Resource r;
  r.name = name;
  s.with("kind", [&](const std::string& v) {
    const auto k = parse_resource_kind(v);
    if (!k) s.fail("kind", "unknown resource kind '" + v + "'");
    r.kind = *k;
  });
  std::uint64_t cap = r.capacity;
  s.uint("capacity", cap);
  if (cap > 1000000) s.fail("capacity", "capacity above 10^6 slots");
  r.capacity = static_cast<std::uint32_t>(cap);
  s.real("bandwidth_bytes_per_s", r.bandwidth_bytes_per_s);
  s.real("latency_s", r.latency_s);
  try {
    r.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigInvalid(e.what());
  }
  return r;
}

inline void read_synth(SectionReader& s, synth::SynthConfig& c) {
  s.reals("framework_mix", c.framework_mix);
  s.real("p_preprocess", c.p_preprocess);
  s.real("p_compress", c.p_compress);
  s.real("p_harden", c.p_harden);
  s.real("quality_gate", c.quality_gate_default);
  s.reals("prune_levels", c.prune_levels);
  s.reals("estimator_mix", c.estimator_mix);
  s.reals("prediction_mix", c.prediction_mix);
  for (Estimator e : kEstimators) {
    auto& m = c.performance_model[static_cast<std::size_t>(e)];
    const std::string suffix = "." + std::string(to_string(e));
    s.distribution("performance" + suffix, m.performance);
    s.distribution("size_bytes" + suffix, m.size_bytes);
    s.distribution("inference_ms" + suffix, m.inference_ms);
    s.distribution("clever_score" + suffix, m.clever_score);
  }
}

inline void read_engine(SectionReader& s, ExperimentConfig& c) {
  for (TaskType t : kTaskTypes) s.string("resource." + std::string(to_string(t)), c.task_resource[static_cast<std::size_t>(t)]);
  s.string("datastore", c.datastore);
  s.real("network_overhead", c.network_overhead);
  s.scaled("fresh_data_tau_days", 86400.0, c.fresh_data_tau_s);
  s.real("potential_w_perf", c.potential_w_perf);
  s.string("compression_profile", c.compression_profile);
  s.real("compression_sigma", c.compression_sigma);
  s.boolean("preprocess_noise", c.preprocess_noise);
  s.real("harden_clever_bump", c.harden_clever_bump);
}

} // namespace detail

/// Parses an experiment config. Relative model paths resolve against
/// `base_dir`. Unknown sections and keys, duplicates and bad values all
/// raise ConfigInvalid.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  detail::Ptree tree;
  std::istringstream in{text};
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigInvalid("line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig c;
  bool saw_experiment = false;
  for (const auto& [name, section] : tree) {
    if (section.empty()) throw ConfigInvalid("key '" + name + "' outside any section");
    detail::SectionReader s{name, section};
    if (name == "experiment") {
      saw_experiment = true;
      detail::read_experiment(s, c, base_dir);
    } else if (name == "arrival") {
      detail::read_arrival(s, c.arrival);
    } else if (text::starts_with(name, "resource.")) {
      c.resources.push_back(detail::read_resource(s, name.substr(9)));
    } else if (name == "synth") {
      detail::read_synth(s, c.synth);
    } else if (name == "engine") {
      detail::read_engine(s, c);
    } else {
      throw ConfigInvalid("unknown section [" + name + "]");
    }
    s.finish();
  }
  if (!saw_experiment) throw ConfigInvalid("missing [experiment] section");
  c.validate();
  return c;
}

/// Reads a config file. `PIPESIM_OUTPUT`, when set, replaces output_dir.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in{path};
  if (!in) throw IoFailure("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto c = parse_config(buf.str(), path.parent_path().empty() ? std::filesystem::path{"."} : path.parent_path());
  if (const char* env = std::getenv("PIPESIM_OUTPUT"); env && *env) c.output_dir = env;
  return c;
}

} // namespace pipesim
