#pragma once

#include <sys/resource.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pipesim/config.hpp"
#include "pipesim/defaults.hpp"
#include "pipesim/error.hpp"
#include "pipesim/experiment.hpp"
#include "pipesim/reference.hpp"
#include "pipesim/stats/arrival.hpp"
#include "pipesim/stats/curve.hpp"
#include "pipesim/stats/gmm.hpp"
#include "pipesim/stats/model_file.hpp"
#include "pipesim/text.hpp"
#include "pipesim/trace/analytics.hpp"
#include "pipesim/trace/sink.hpp"
#include "pipesim/trace/summary.hpp"

namespace pipesim::cli {

// Stable exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kFitFailure = 3;
inline constexpr int kMissingDependency = 4;

inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const FitError*>(&e)) return kFitFailure;
  if (dynamic_cast<const ModelMissing*>(&e) || dynamic_cast<const ExecutorMissing*>(&e)) return kMissingDependency;
  return kInputError;
}

/// Runs `body`, reporting any error on `err` and mapping it to an exit code.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  }
}

inline double peak_rss_mb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<double>(u.ru_maxrss) / 1024.0; // ru_maxrss is in KiB on Linux
}

// ---------------------------------------------------------------- csv input

/// Comma-separated table with a header row.
class CsvTable {
public:
  static CsvTable read(const std::filesystem::path& path) {
    std::ifstream in{path};
    if (!in) throw IoFailure("cannot open " + path.string());
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (text::trim(line).empty()) continue;
      std::vector<std::string> cells;
      for (auto c : text::split(line, ',')) cells.emplace_back(text::trim(c));
      if (t.header_.empty()) {
        t.header_ = std::move(cells);
        continue;
      }
      if (cells.size() != t.header_.size())
        throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(t.header_.size()) + " fields, got " + std::to_string(cells.size()));
      t.rows_.push_back(std::move(cells));
      t.lines_.push_back(line_no);
    }
    if (t.header_.empty()) throw InvalidArgument(path.string() + ": empty file");
    t.path_ = path.string();
    return t;
  }

  std::size_t rows() const { return rows_.size(); }
  bool has(const std::string& col) const { return std::find(header_.begin(), header_.end(), col) != header_.end(); }

  std::size_t column(const std::string& col) const {
    const auto it = std::find(header_.begin(), header_.end(), col);
    if (it == header_.end()) throw InvalidArgument(path_ + ": missing column '" + col + "'");
    return static_cast<std::size_t>(it - header_.begin());
  }

  const std::string& text(std::size_t row, std::size_t col) const { return rows_[row][col]; }

  double number(std::size_t row, std::size_t col) const {
    const auto v = text::parse_double(rows_[row][col]);
    if (!v || !std::isfinite(*v))
      throw InvalidArgument(path_ + ":" + std::to_string(lines_[row]) + ": '" + rows_[row][col] + "' is not a number");
    return *v;
  }

  double positive(std::size_t row, std::size_t col) const {
    const double v = number(row, col);
    if (!(v > 0)) throw InvalidArgument(path_ + ":" + std::to_string(lines_[row]) + ": value must be > 0");
    return v;
  }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
  std::string path_;
};

// ---------------------------------------------------------------- fit

enum class FitKind { assets, arrivals, durations, curve };

inline std::optional<FitKind> parse_fit_kind(std::string_view s) {
  if (s == "assets") return FitKind::assets;
  if (s == "arrivals") return FitKind::arrivals;
  if (s == "durations") return FitKind::durations;
  if (s == "curve") return FitKind::curve;
  return std::nullopt;
}

struct FitOptions {
  std::filesystem::path input;
  FitKind kind = FitKind::assets;
  std::filesystem::path out;
  std::string name;       ///< model name; empty picks the conventional one
  int components = 0;     ///< mixture size; 0 picks 5 for assets, 2 for durations
  std::uint64_t seed = 1;
  double tz_offset_s = 0;
  bool merge = false;     ///< add to an existing model file instead of replacing it
};

/// CSV schemas:
///   assets     rows,cols,bytes
///   arrivals   timestamp_epoch_s
///   durations  [framework,]duration_s  (one mixture per framework, else --name)
///   curve      cells,duration_s
inline int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto csv = CsvTable::read(o.input);
    stats::ModelSet set;
    if (o.merge && std::filesystem::exists(o.out)) set = stats::load_model_file(o.out.string());

    auto log_matrix = [&](const std::vector<std::size_t>& cols, const std::vector<std::size_t>& rows) {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::log(csv.positive(rows[i], cols[j]));
      return m;
    };
    auto all_rows = [&] {
      std::vector<std::size_t> r(csv.rows());
      std::iota(r.begin(), r.end(), std::size_t{0});
      return r;
    };

    switch (o.kind) {
    case FitKind::assets: {
      const int k = o.components > 0 ? o.components : 5;
      const auto x = log_matrix({csv.column("rows"), csv.column("cols"), csv.column("bytes")}, all_rows());
      auto fit = stats::fit_gmm_detailed(x, k, o.seed);
      fit.model.tag = "fitted:" + o.input.filename().string();
      const std::string name = o.name.empty() ? "assets" : o.name;
      out << "[gmm " << name << "] k=" << k << " n=" << x.rows()
          << " mean log-likelihood=" << text::format_real(fit.log_likelihood.back()) << " iterations=" << fit.iterations
          << (fit.converged ? "" : " (not converged)") << "\n";
      set.gmms[name] = fit.model;
      break;
    }
    case FitKind::arrivals: {
      const auto col = csv.column("timestamp_epoch_s");
      std::vector<double> ts(csv.rows());
      for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = csv.number(i, col);
      std::sort(ts.begin(), ts.end());
      stats::ArrivalFitReport rep;
      const auto profile = stats::fit_arrival_profile(ts, o.tz_offset_s, &rep);
      std::size_t inherited = 0;
      for (bool b : profile.inherited) inherited += b ? 1 : 0;
      const std::string name = o.name.empty() ? "default" : o.name;
      out << "[profile " << name << "] interarrivals=" << rep.interarrivals << " clusters=" << stats::kCells
          << " fitted=" << stats::kCells - inherited << " inherited=" << inherited
          << " global=" << profile.global.dist.to_string() << " sse=" << text::format_real(profile.global.sse) << "\n";
      set.profiles[name] = profile;
      break;
    }
    case FitKind::durations: {
      const int k = o.components > 0 ? o.components : 2;
      const auto dcol = csv.column("duration_s");
      std::map<std::string, std::vector<std::size_t>> groups;
      if (csv.has("framework")) {
        const auto fcol = csv.column("framework");
        for (std::size_t i = 0; i < csv.rows(); ++i) {
          const auto f = parse_framework(csv.text(i, fcol));
          if (!f) throw InvalidArgument("unknown framework '" + csv.text(i, fcol) + "'");
          groups[o.name.empty() ? engine::train_model_name(*f) : o.name + "." + std::string(to_string(*f))].push_back(i);
        }
      } else {
        if (o.name.empty()) throw InvalidArgument("durations without a framework column need --name");
        groups[o.name] = all_rows();
      }
      for (const auto& [name, rows] : groups) {
        const auto x = log_matrix({dcol}, rows);
        auto fit = stats::fit_gmm_detailed(x, k, o.seed);
        fit.model.tag = "fitted:" + o.input.filename().string();
        std::vector<double> secs(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) secs[i] = csv.positive(rows[i], dcol);
        out << "[gmm " << name << "] k=" << k << " n=" << rows.size()
            << " mean log-likelihood=" << text::format_real(fit.log_likelihood.back());
        try {
          const auto best = stats::fit_best_distribution(secs);
          out << " best family=" << best.dist.to_string() << " sse=" << text::format_real(best.sse);
          set.dists[name] = best;
        } catch (const FitError&) {
          // The mixture is the model the engine uses; the family fit is a diagnostic.
        }
        out << "\n";
        set.gmms[name] = fit.model;
      }
      break;
    }
    case FitKind::curve: {
      const auto ccol = csv.column("cells");
      const auto dcol = csv.column("duration_s");
      std::vector<double> xs(csv.rows()), ys(csv.rows());
      for (std::size_t i = 0; i < csv.rows(); ++i) {
        xs[i] = std::log(csv.positive(i, ccol));
        ys[i] = std::log(csv.positive(i, dcol));
      }
      const auto fit = stats::fit_exp_curve_detailed(xs, ys);
      const std::string name = o.name.empty() ? "preprocess" : o.name;
      out << "[curve " << name << "] a=" << text::format_real(fit.curve.a) << " b=" << text::format_real(fit.curve.b)
          << " c=" << text::format_real(fit.curve.c) << " noise_mu=" << text::format_real(fit.curve.noise_mu)
          << " noise_sigma=" << text::format_real(fit.curve.noise_sigma) << " sse=" << text::format_real(fit.sse)
          << " iterations=" << fit.iterations << "\n";
      set.curves[name] = fit.curve;
      break;
    }
    }
    stats::write_model_file(o.out.string(), set);
    out << "wrote " << o.out.string() << " (" << set.size() << " models)\n";
    return kOk;
  });
}

// ---------------------------------------------------------------- run

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  unsigned replications = 1;
  unsigned parallel = 1;
  bool quiet = false;        ///< suppress progress lines
  double bucket_s = 3600.0;  ///< utilization.csv resolution
};

/// Files that one replication leaves in its directory.
struct RunOutputs {
  std::filesystem::path dir;
  trace::RunSummary summary;
  double wall_s = 0;
};

inline RunOutputs run_replication(const Experiment& exp, std::uint64_t seed, const std::filesystem::path& dir,
                                  double bucket_s, std::function<void(SimTime, std::uint64_t)> progress) {
  std::filesystem::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();
  auto ec = exp.engine_config(seed);
  ec.progress = std::move(progress);
  auto sim = exp.simulation(std::move(ec));

  std::optional<trace::NdjsonWriter> writer;
  if (exp.config().write_trace) writer.emplace((dir / "trace.ndjson").string());
  trace::UtilizationTimeline timeline{bucket_s};
  trace::ArrivalHeatmap heatmap;
  std::vector<trace::TraceSink*> sinks{&timeline, &heatmap};
  if (writer) sinks.push_back(&*writer);
  trace::TeeSink tee{sinks};
  LineageCsv lineage{dir / "lineage.csv"};

  RunOutputs r;
  r.dir = dir;
  r.summary = sim->run(tee, &lineage);
  lineage.close();
  timeline.write_csv((dir / "utilization.csv").string());
  heatmap.write_csv((dir / "arrivals_heatmap.csv").string());
  std::ofstream{dir / "summary.txt"} << r.summary.to_text();
  r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.replications < 1) throw ConfigInvalid("--replications must be >= 1");
    if (o.parallel < 1) throw ConfigInvalid("--parallel must be >= 1");
    auto cfg = load_config(o.config);
    if (!std::filesystem::exists(cfg.models)) throw ModelMissing("model file " + cfg.models.string() + " not found");
    const Experiment exp{cfg, stats::load_model_file(cfg.models.string())};
    const std::uint64_t base_seed = o.seed.value_or(cfg.seed);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::optional<RunOutputs>> results(o.replications);
    std::vector<std::string> errors(o.replications);
    std::vector<int> codes(o.replications, kOk);
    std::atomic<unsigned> next{0};
    std::mutex log_mu;

    auto worker = [&] {
      for (unsigned i; (i = next.fetch_add(1)) < o.replications;) {
        const auto dir = o.replications == 1 ? cfg.output_dir : cfg.output_dir / ("rep-" + std::to_string(i));
        std::function<void(SimTime, std::uint64_t)> progress;
        if (cfg.progress && !o.quiet)
          progress = [&, i](SimTime now, std::uint64_t arrived) {
            std::lock_guard lock{log_mu};
            err << (o.replications > 1 ? "[rep " + std::to_string(i) + "] " : std::string{}) << "day "
                << static_cast<long long>(now.seconds() / 86400.0) << ": " << arrived << " pipelines arrived\n";
          };
        try {
          results[i] = run_replication(exp, replication_seed(base_seed, i), dir, o.bucket_s, progress);
        } catch (const std::exception& e) {
          errors[i] = e.what();
          codes[i] = exit_code(e);
        }
      }
    };
    const unsigned threads = std::min(o.parallel, o.replications);
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    int code = kOk;
    for (unsigned i = 0; i < o.replications; ++i) {
      if (!results[i]) {
        err << "error: replication " << i << ": " << errors[i] << "\n";
        if (code == kOk) code = codes[i];
        continue;
      }
      const auto& r = *results[i];
      if (o.replications > 1) out << "== replication " << i << " (seed " << replication_seed(base_seed, i) << ")\n";
      out << r.summary.to_text();
      out << "outputs: " << r.dir.string() << "\n";
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char line[160];
    std::snprintf(line, sizeof line, "wall-clock: %.3f s, peak memory: %.1f MB\n", wall, peak_rss_mb());
    out << line;
    return code;
  });
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::filesystem::path trace;
  std::optional<std::filesystem::path> out_dir; ///< defaults to the trace's directory
  bool summary = false;
  bool utilization = false;
  double bucket_s = 3600.0;
  bool heatmap = false;
  std::vector<std::string> qq;        ///< metrics, e.g. train_duration
  std::string against;                ///< "model" or a second trace
  std::optional<std::filesystem::path> config; ///< for `--against model`
  std::optional<std::filesystem::path> models; ///< overrides the config's model file
  std::size_t quantiles = 99;
  std::uint64_t seed = 1;
};

inline int cmd_report(ReportOptions o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!o.summary && !o.utilization && !o.heatmap && o.qq.empty()) o.summary = true;
    if (!o.qq.empty() && o.against.empty()) throw InvalidArgument("--qq needs --against model|<trace>");
    const auto dir = o.out_dir.value_or(o.trace.parent_path().empty() ? std::filesystem::path{"."} : o.trace.parent_path());
    std::filesystem::create_directories(dir);

    trace::Summarizer summarizer;
    trace::UtilizationTimeline timeline{o.bucket_s};
    trace::ArrivalHeatmap heatmap;
    trace::SeriesCollector series;
    std::vector<trace::TraceSink*> sinks{&summarizer};
    if (o.utilization) sinks.push_back(&timeline);
    if (o.heatmap) sinks.push_back(&heatmap);
    if (!o.qq.empty()) sinks.push_back(&series);
    trace::TeeSink tee{sinks};
    trace::read_trace_file(o.trace.string(), tee);

    if (o.summary) {
      const auto text = summarizer.summary().to_text();
      out << text;
      std::ofstream{dir / "summary.txt"} << text;
    }
    if (o.utilization) {
      timeline.write_csv((dir / "utilization.csv").string());
      out << "wrote " << (dir / "utilization.csv").string() << "\n";
    }
    if (o.heatmap) {
      heatmap.write_csv((dir / "arrivals_heatmap.csv").string());
      out << "wrote " << (dir / "arrivals_heatmap.csv").string() << "\n";
    }
    if (!o.qq.empty()) {
      std::optional<trace::SeriesCollector> other;
      std::optional<ExperimentConfig> cfg;
      stats::ModelSet set;
      if (o.against == "model") {
        if (!o.config && !o.models) throw InvalidArgument("--against model needs --config or --models");
        cfg = o.config ? load_config(*o.config) : ExperimentConfig{};
        const auto path = o.models.value_or(cfg->models);
        if (!std::filesystem::exists(path)) throw ModelMissing("model file " + path.string() + " not found");
        set = stats::load_model_file(path.string());
      } else {
        other.emplace();
        trace::read_trace_file(o.against, *other);
      }
      for (const auto& metric : o.qq) {
        const auto& a = series.series(metric);
        std::vector<double> b;
        std::string b_label;
        if (other) {
          b = other->series(metric);
          b_label = "other";
        } else {
          b = model_reference(metric, set, *cfg, std::max<std::size_t>(a.size(), 10000), o.seed);
          b_label = "model";
        }
        const auto pts = trace::qq_export(a, b, o.quantiles);
        const auto file = dir / ("qq_" + metric + ".csv");
        trace::write_qq_csv(file.string(), pts, "trace", b_label);
        out << "wrote " << file.string() << " (" << pts.size() << " quantiles, " << a.size() << " vs " << b.size()
            << " values)\n";
      }
    }
    return kOk;
  });
}

// ---------------------------------------------------------------- defaults

inline int cmd_defaults(const std::filesystem::path& out_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto set = defaults::model_set();
    stats::write_model_file(out_path.string(), set);
    out << "wrote " << out_path.string() << " (" << set.size() << " models)\n";
    return kOk;
  });
}

} // namespace pipesim::cli
