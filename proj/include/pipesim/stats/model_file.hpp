#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pipesim/error.hpp"
#include "pipesim/stats/arrival.hpp"
#include "pipesim/stats/curve.hpp"
#include "pipesim/stats/fit_dist.hpp"
#include "pipesim/stats/gmm.hpp"
#include "pipesim/text.hpp"

namespace pipesim::stats {

/// Every fitted model a simulation may draw from, by name.
struct ModelSet {
  std::map<std::string, GmmModel> gmms;
  std::map<std::string, ExpCurve> curves;
  std::map<std::string, ArrivalProfile> profiles;
  std::map<std::string, FittedDist> dists;

  std::size_t size() const { return gmms.size() + curves.size() + profiles.size() + dists.size(); }

  void merge(const ModelSet& other) {
    for (const auto& [k, v] : other.gmms) gmms.insert_or_assign(k, v);
    for (const auto& [k, v] : other.curves) curves.insert_or_assign(k, v);
    for (const auto& [k, v] : other.profiles) profiles.insert_or_assign(k, v);
    for (const auto& [k, v] : other.dists) dists.insert_or_assign(k, v);
  }
};

inline constexpr std::string_view kModelFileMagic = "pipesim-models";
inline constexpr int kModelFileVersion = 1;

namespace detail {

inline std::string fitted_to_string(const FittedDist& f) {
  return f.dist.to_string() + " sse=" + text::format_real(f.sse) + " n=" + std::to_string(f.n);
}

inline FittedDist fitted_from_string(std::string_view s) {
  const auto parts = text::split(text::trim(s), ' ');
  if (parts.size() != 3 || !text::starts_with(parts[1], "sse=") || !text::starts_with(parts[2], "n="))
    throw CorruptModel("bad fitted distribution '" + std::string(s) + "'");
  FittedDist f;
  try {
    f.dist = Distribution::parse(parts[0]);
  } catch (const InvalidArgument& e) {
    throw CorruptModel(e.what());
  }
  const auto sse = text::parse_double(parts[1].substr(4));
  const auto n = text::parse_uint(parts[2].substr(2));
  if (!sse || !n || *sse < 0) throw CorruptModel("bad fit score in '" + std::string(s) + "'");
  f.sse = *sse;
  f.n = *n;
  return f;
}

struct Section {
  std::string kind;
  std::string name;
  std::map<std::string, std::string, std::less<>> values;

  const std::string& get(std::string_view key) const {
    const auto it = values.find(key);
    if (it == values.end())
      throw CorruptModel("section [" + kind + " " + name + "] lacks key '" + std::string(key) + "'");
    return it->second;
  }

  double real(std::string_view key) const {
    const auto v = text::parse_double(get(key));
    if (!v) throw CorruptModel("key '" + std::string(key) + "' in [" + kind + " " + name + "] is not a real");
    return *v;
  }

  std::vector<double> reals(std::string_view key, std::size_t expected) const {
    const auto v = text::parse_reals(get(key));
    if (!v || v->size() != expected)
      throw CorruptModel("key '" + std::string(key) + "' in [" + kind + " " + name + "] has the wrong length");
    return *v;
  }
};

inline GmmModel gmm_from_section(const Section& s) {
  const auto k = text::parse_uint(s.get("k"));
  const auto d = text::parse_uint(s.get("d"));
  if (!k || !d || *k == 0 || *d == 0 || *k > 100000 || *d > 1000) throw CorruptModel("bad mixture shape in [gmm " + s.name + "]");
  GmmModel g;
  if (auto it = s.values.find("tag"); it != s.values.end()) g.tag = it->second;
  g.weights = s.reals("weights", *k);
  for (std::size_t j = 0; j < *k; ++j) {
    const auto m = s.reals("mean." + std::to_string(j), *d);
    const auto c = s.reals("cov." + std::to_string(j), *d * *d);
    g.means.emplace_back(Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(*d)));
    Eigen::MatrixXd cov(*d, *d);
    for (std::size_t r = 0; r < *d; ++r)
      for (std::size_t col = 0; col < *d; ++col) cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = c[r * *d + col];
    g.covariances.push_back(std::move(cov));
  }
  if (s.values.count("lower") || s.values.count("upper")) {
    g.lower = s.reals("lower", *d);
    g.upper = s.reals("upper", *d);
  }
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptModel("[gmm " + s.name + "]: " + e.what());
  }
  return g;
}

inline ExpCurve curve_from_section(const Section& s) {
  ExpCurve c;
  const auto& space = s.get("space");
  if (space == curve_space_name(CurveSpace::log_seconds)) c.space = CurveSpace::log_seconds;
  else if (space == curve_space_name(CurveSpace::seconds)) c.space = CurveSpace::seconds;
  else throw CorruptModel("unknown curve space '" + space + "'");
  c.a = s.real("a");
  c.b = s.real("b");
  c.c = s.real("c");
  c.noise_mu = s.real("noise_mu");
  c.noise_sigma = s.real("noise_sigma");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptModel("[curve " + s.name + "]: " + e.what());
  }
  return c;
}

inline ArrivalProfile profile_from_section(const Section& s) {
  ArrivalProfile p;
  p.rate_factor = s.real("rate_factor");
  p.tz_offset_s = s.real("tz_offset_s");
  p.global = fitted_from_string(s.get("global"));
  for (int wd = 0; wd < kWeekdays; ++wd)
    for (int h = 0; h < kHours; ++h) {
      const std::string key = "cell." + std::to_string(wd) + "." + std::to_string(h);
      p.cell(wd, h) = fitted_from_string(s.get(key));
      const auto& inh = s.get(key + ".inherited");
      if (inh != "0" && inh != "1") throw CorruptModel("bad inherited flag for " + key);
      p.inherited[static_cast<std::size_t>(wd * kHours + h)] = inh == "1";
    }
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptModel("[profile " + s.name + "]: " + e.what());
  }
  return p;
}

} // namespace detail

inline std::string serialize_models(const ModelSet& models) {
  std::ostringstream out;
  out << kModelFileMagic << " v" << kModelFileVersion << "\n";
  for (const auto& [name, g] : models.gmms) {
    out << "[gmm " << name << "]\n";
    if (!g.tag.empty()) out << "tag = " << g.tag << "\n";
    out << "k = " << g.k() << "\n";
    out << "d = " << g.dim() << "\n";
    out << "weights = " << text::join_reals(g.weights.data(), g.k()) << "\n";
    for (std::size_t j = 0; j < g.k(); ++j) {
      out << "mean." << j << " = " << text::join_reals(g.means[j].data(), g.dim()) << "\n";
      // Row-major: transpose the column-major Eigen storage.
      const Eigen::MatrixXd rm = g.covariances[j].transpose();
      out << "cov." << j << " = " << text::join_reals(rm.data(), g.dim() * g.dim()) << "\n";
    }
    if (g.bounded()) {
      out << "lower = " << text::join_reals(g.lower.data(), g.lower.size()) << "\n";
      out << "upper = " << text::join_reals(g.upper.data(), g.upper.size()) << "\n";
    }
  }
  for (const auto& [name, c] : models.curves) {
    out << "[curve " << name << "]\n";
    out << "space = " << curve_space_name(c.space) << "\n";
    out << "a = " << text::format_real(c.a) << "\n";
    out << "b = " << text::format_real(c.b) << "\n";
    out << "c = " << text::format_real(c.c) << "\n";
    out << "noise_mu = " << text::format_real(c.noise_mu) << "\n";
    out << "noise_sigma = " << text::format_real(c.noise_sigma) << "\n";
  }
  for (const auto& [name, p] : models.profiles) {
    out << "[profile " << name << "]\n";
    out << "rate_factor = " << text::format_real(p.rate_factor) << "\n";
    out << "tz_offset_s = " << text::format_real(p.tz_offset_s) << "\n";
    out << "global = " << detail::fitted_to_string(p.global) << "\n";
    for (int wd = 0; wd < kWeekdays; ++wd)
      for (int h = 0; h < kHours; ++h) {
        out << "cell." << wd << "." << h << " = " << detail::fitted_to_string(p.cell(wd, h)) << "\n";
        out << "cell." << wd << "." << h << ".inherited = "
            << (p.inherited[static_cast<std::size_t>(wd * kHours + h)] ? 1 : 0) << "\n";
      }
  }
  for (const auto& [name, f] : models.dists) {
    out << "[dist " << name << "]\n";
    out << "dist = " << f.dist.to_string() << "\n";
    out << "sse = " << text::format_real(f.sse) << "\n";
    out << "n = " << f.n << "\n";
  }
  out << "end " << models.size() << "\n";
  return out.str();
}

/// Parses a model file. Throws FormatVersionMismatch for a different
/// version header and CorruptModel for anything unreadable, including a
/// missing `end` trailer (truncation).
inline ModelSet load_models(std::string_view bytes) {
  std::vector<detail::Section> sections;
  bool header = false, ended = false;
  std::size_t declared = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    const auto line = text::trim(bytes.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (ended) throw CorruptModel("content after the end trailer at line " + std::to_string(line_no));
    if (!header) {
      const auto parts = text::split(line, ' ');
      if (parts.size() != 2 || parts[0] != kModelFileMagic || !text::starts_with(parts[1], "v"))
        throw CorruptModel("missing 'pipesim-models v1' header");
      const auto v = text::parse_int(parts[1].substr(1));
      if (!v) throw CorruptModel("unreadable version in header");
      if (*v != kModelFileVersion)
        throw FormatVersionMismatch("model file version " + std::to_string(*v) + ", expected " +
                                    std::to_string(kModelFileVersion));
      header = true;
      continue;
    }
    if (text::starts_with(line, "end ")) {
      const auto n = text::parse_uint(line.substr(4));
      if (!n) throw CorruptModel("bad end trailer");
      declared = *n;
      ended = true;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw CorruptModel("bad section header at line " + std::to_string(line_no));
      const auto inner = text::split(text::trim(line.substr(1, line.size() - 2)), ' ');
      if (inner.size() != 2 || inner[1].empty()) throw CorruptModel("section header needs a kind and a name");
      sections.push_back({std::string(inner[0]), std::string(inner[1]), {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || sections.empty())
      throw CorruptModel("unexpected line " + std::to_string(line_no));
    auto key = std::string(text::trim(line.substr(0, eq)));
    auto value = std::string(text::trim(line.substr(eq + 1)));
    if (!sections.back().values.emplace(std::move(key), std::move(value)).second)
      throw CorruptModel("duplicate key at line " + std::to_string(line_no));
  }
  if (!header) throw CorruptModel("empty model file");
  if (!ended) throw CorruptModel("missing end trailer (truncated file?)");
  if (declared != sections.size()) throw CorruptModel("end trailer count does not match the sections");

  ModelSet models;
  for (const auto& s : sections) {
    bool inserted = false;
    if (s.kind == "gmm") inserted = models.gmms.emplace(s.name, detail::gmm_from_section(s)).second;
    else if (s.kind == "curve") inserted = models.curves.emplace(s.name, detail::curve_from_section(s)).second;
    else if (s.kind == "profile") inserted = models.profiles.emplace(s.name, detail::profile_from_section(s)).second;
    else if (s.kind == "dist") {
      FittedDist f;
      try {
        f.dist = Distribution::parse(s.get("dist"));
      } catch (const InvalidArgument& e) {
        throw CorruptModel(e.what());
      }
      f.sse = s.real("sse");
      const auto n = text::parse_uint(s.get("n"));
      if (!n) throw CorruptModel("bad sample count in [dist " + s.name + "]");
      f.n = *n;
      inserted = models.dists.emplace(s.name, f).second;
    } else {
      throw CorruptModel("unknown section kind '" + s.kind + "'");
    }
    if (!inserted) throw CorruptModel("duplicate section [" + s.kind + " " + s.name + "]");
  }
  return models;
}

inline ModelSet load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelMissing("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_models(ss.str());
}

inline void write_model_file(const std::string& path, const ModelSet& models) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write model file '" + path + "'");
  out << serialize_models(models);
  if (!out) throw IoFailure("write to '" + path + "' failed");
}

} // namespace pipesim::stats
