// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Needs no network and no data beyond the repository.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pipesim/cli.hpp"
#include "pipesim/config.hpp"
#include "pipesim/defaults.hpp"
#include "pipesim/engine/compression.hpp"
#include "pipesim/engine/simulation.hpp"
#include "pipesim/experiment.hpp"
#include "pipesim/stats/arrival.hpp"
#include "pipesim/stats/curve.hpp"
#include "pipesim/stats/gmm.hpp"
#include "pipesim/stats/model_file.hpp"
#include "pipesim/stats/quantile.hpp"
#include "pipesim/synth.hpp"
#include "pipesim/trace/analytics.hpp"
#include "pipesim/trace/sink.hpp"

using namespace pipesim;
namespace fs = std::filesystem;

namespace {

const fs::path kSource{PIPESIM_SOURCE_DIR};
const fs::path kModels = kSource / "models" / "default.models";

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in{p, std::ios::binary};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Scratch directory, removed on exit.
struct Scratch {
  fs::path root = fs::temp_directory_path() / ("pipesim-acceptance-" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(root); }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  fs::path operator/(const std::string& s) const { return root / s; }
};

const std::string kResources = R"(
[resource.compute]
kind = compute
capacity = %u

[resource.training]
kind = training
capacity = %u

[resource.datastore]
kind = datastore
bandwidth_bytes_per_s = 5e8
latency_s = 0.05
)";

std::string resources(unsigned compute, unsigned training) { return fmt(kResources.c_str(), compute, training); }

std::vector<double> probe_levels() {
  std::vector<double> p;
  for (int i = 1; i <= 19; ++i) p.push_back(i * 0.05);
  return p;
}

/// Largest |q_a(p) - q_ref(p)| / q_ref(p) over p = 0.05, 0.10, ..., 0.95.
double max_rel_quantile_gap(std::vector<double> a, std::vector<double> ref, double* at = nullptr) {
  std::sort(a.begin(), a.end());
  std::sort(ref.begin(), ref.end());
  double worst = 0.0;
  for (double p : probe_levels()) {
    const double qa = stats::quantile_sorted(a, p);
    const double qr = stats::quantile_sorted(ref, p);
    const double gap = std::abs(qa - qr) / qr;
    if (gap > worst) {
      worst = gap;
      if (at) *at = p;
    }
  }
  return worst;
}

// ---------------------------------------------------------------- 1. performance

Verdict performance(const Scratch& tmp) {
  auto cfg = load_config(kSource / "configs" / "paper-year.cfg");
  cfg.progress = false;
  const auto set = stats::load_model_file(kModels.string());

  auto timed = [&](double days, const std::string& dir) {
    auto c = cfg;
    c.horizon_s = days * 86400.0;
    const Experiment exp{c, set};
    return cli::run_replication(exp, c.seed, tmp / dir, 3600.0, {});
  };
  const auto month = timed(30, "perf-30d");
  const auto year = timed(365, "perf-365d");
  const double rss = cli::peak_rss_mb();
  const double trace_mb = static_cast<double>(fs::file_size(year.dir / "trace.ndjson")) / 1e6;
  const bool pass = month.wall_s <= 60.0 && year.wall_s <= 600.0 && rss <= 1024.0 &&
                    year.summary.pipelines.arrived > 700000;
  return {pass, fmt("30 d: %llu pipelines in %.2f s (gate 60 s); 365 d: %llu pipelines in %.2f s (limit 600 s), "
                    "%.0f MB trace streamed, peak RSS %.1f MB (limit 1024), %.3f ms/pipeline",
                    static_cast<unsigned long long>(month.summary.pipelines.arrived), month.wall_s,
                    static_cast<unsigned long long>(year.summary.pipelines.arrived), year.wall_s, trace_mb, rss,
                    1e3 * year.wall_s / static_cast<double>(year.summary.pipelines.arrived))};
}

// ---------------------------------------------------------------- 2. linear scaling

Verdict scaling(const Scratch& tmp) {
  auto cfg = load_config(kSource / "configs" / "paper-year.cfg");
  cfg.progress = false;
  const auto set = stats::load_model_file(kModels.string());
  const std::vector<double> counts{1e4, 5e4, 1e5, 2e5};
  std::vector<double> x, y;
  std::string detail;
  for (double n : counts) {
    auto c = cfg;
    // Arrivals land at 0, 44, 88, ... on average, so n pipelines need (n - 1) * 44 s.
    c.horizon_s = (n - 1) * 44.0;
    const Experiment exp{c, set};
    double best = 1e300;
    std::uint64_t arrived = 0;
    for (int rep = 0; rep < 2; ++rep) {
      const auto r = cli::run_replication(exp, c.seed, tmp / "scaling", 3600.0, {});
      best = std::min(best, r.wall_s);
      arrived = r.summary.pipelines.arrived;
    }
    x.push_back(static_cast<double>(arrived));
    y.push_back(best);
    detail += fmt("%s%llu: %.3f s", detail.empty() ? "" : ", ", static_cast<unsigned long long>(arrived), best);
  }
  const double k = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  const double slope = sxy / sxx;
  return {r2 >= 0.98, fmt("R^2 = %.5f (min 0.98), slope %.4f ms/pipeline; ", r2, 1e3 * slope) + detail};
}

// ---------------------------------------------------------------- 3. framework mix

Verdict framework_mix() {
  const synth::SynthConfig cfg;
  Rng rng = make_stream(31, "pipelines");
  std::array<int, 5> seen{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto g = synth::synth_pipeline(cfg, rng, static_cast<std::uint64_t>(i));
    for (const auto& v : g.vertices)
      if (v.type == TaskType::train) ++seen[static_cast<std::size_t>(std::get<TrainParams>(v.params).framework)];
  }
  const std::array<double, 5> expected{0.63, 0.32, 0.03, 0.01, 0.01};
  bool pass = true;
  int total = 0;
  std::string detail;
  for (std::size_t f = 0; f < 5; ++f) {
    total += seen[f];
    const double freq = seen[f] / static_cast<double>(n);
    pass = pass && std::abs(freq - expected[f]) <= 0.015;
    detail += fmt("%s%s %.2f%% (target %.0f%%)", f ? ", " : "", std::string(to_string(kFrameworks[f])).c_str(),
                  100 * freq, 100 * expected[f]);
  }
  pass = pass && total == n;
  return {pass, detail + fmt("; %d pipelines, one train task each", total)};
}

// ---------------------------------------------------------------- 4. compression table

Verdict compression_table() {
  // Transcribed from the published table: accuracy %, size MB, inference ms.
  struct Row {
    double prune, acc_gn, acc_rn, size_gn, size_rn, inf_gn, inf_rn;
  };
  const std::array<Row, 5> table{{{0.0, 80.7, 81.3, 42.5, 91.1, 128, 223},
                                  {0.2, 80.9, 80.9, 28.7, 83.5, 117, 200},
                                  {0.4, 80.0, 80.8, 20.9, 65.2, 100, 169},
                                  {0.6, 77.7, 79.5, 14.6, 41.9, 84, 141},
                                  {0.8, 69.8, 69.8, 8.5, 8.5, 71, 72}}};
  TrainedModel m;
  m.performance = 0.5;
  m.size_bytes = 3.0e6;
  m.inference_ms = 40.0;
  double worst = 0.0;
  int checked = 0;
  for (const auto& row : table) {
    for (int net = 0; net < 2; ++net) {
      const auto& profile = net == 0 ? engine::googlenet_profile() : engine::resnet50_profile();
      const auto out = engine::apply_compression(m, row.prune, profile);
      const double acc = net == 0 ? row.acc_gn / table[0].acc_gn : row.acc_rn / table[0].acc_rn;
      const double size = net == 0 ? row.size_gn / table[0].size_gn : row.size_rn / table[0].size_rn;
      const double inf = net == 0 ? row.inf_gn / table[0].inf_gn : row.inf_rn / table[0].inf_rn;
      for (auto [got, want] : {std::pair{out.performance / m.performance, acc}, std::pair{out.size_bytes / m.size_bytes, size},
                               std::pair{out.inference_ms / m.inference_ms, inf}}) {
        worst = std::max(worst, std::abs(got - want));
        ++checked;
      }
    }
  }
  return {worst <= 1e-12 && checked == 30, fmt("%d ratios, max |error| = %.3g (tolerance 1e-12)", checked, worst)};
}

// ---------------------------------------------------------------- 5. distribution recovery

// Known generators, written without the library's samplers.
struct LnComponent {
  double weight, median_s, sd_ln;
};

const std::array<std::vector<LnComponent>, 5> kTrainGenerator{{
    {{0.6, 15, 0.5}, {0.4, 120, 0.6}},   // SparkML
    {{0.5, 300, 0.6}, {0.5, 2000, 0.7}}, // TensorFlow
    {{0.7, 400, 0.6}, {0.3, 3000, 0.5}}, // PyTorch
    {{1.0, 900, 0.7}},                   // Caffe
    {{1.0, 45, 0.9}},                    // Other
}};

double draw_train(std::size_t framework, Rng& rng) {
  const auto& comps = kTrainGenerator[framework];
  double u = std::uniform_real_distribution<double>{0, 1}(rng);
  std::size_t j = 0;
  while (j + 1 < comps.size() && u > comps[j].weight) u -= comps[j++].weight;
  return std::exp(std::log(comps[j].median_s) + comps[j].sd_ln * std::normal_distribution<double>{0, 1}(rng));
}

std::size_t draw_framework(Rng& rng) {
  const std::array<double, 5> mix{0.63, 0.32, 0.03, 0.01, 0.01};
  double u = std::uniform_real_distribution<double>{0, 1}(rng);
  std::size_t f = 0;
  while (f + 1 < mix.size() && u >= mix[f]) u -= mix[f++];
  return f;
}

// Diurnal lognormal interarrivals: quick afternoons, slow nights, slower weekends.
constexpr double kGenSigma = 0.8;
double generator_cell_mean(int weekday, int hour) {
  const double pi = 3.14159265358979323846;
  double m = 50.0 / (1.0 + 0.7 * std::sin(2 * pi * (hour - 10) / 24.0));
  if (weekday >= 5) m *= 2.0;
  return m;
}
double draw_interarrival(double epoch_s, Rng& rng) {
  const auto slot = stats::calendar_slot(epoch_s, 0.0);
  const double m = generator_cell_mean(slot.weekday, slot.hour);
  return std::lognormal_distribution<double>{std::log(m) - kGenSigma * kGenSigma / 2, kGenSigma}(rng);
}

struct GenAsset {
  double rows, cols, bytes;
};
GenAsset draw_asset(Rng& rng) {
  std::normal_distribution<double> z{0, 1};
  for (;;) {
    const double lr = 8.5 + 1.6 * z(rng);
    const double lc = 2.8 + 0.9 * z(rng);
    const double rows = std::round(std::exp(lr)), cols = std::round(std::exp(lc));
    if (rows < 50 || cols < 2) continue;
    return {rows, cols, std::round(std::exp(lr + lc + std::log(8.0) + 0.4 * z(rng)))};
  }
}
constexpr double kCurveA = 0.025, kCurveB = 1.30, kCurveC = 1.8, kCurveNoise = 0.25;
double draw_preprocess(double cells, Rng& rng) {
  const double f = kCurveA * std::pow(kCurveB, std::log(cells)) + kCurveC;
  return std::exp(f + kCurveNoise * std::normal_distribution<double>{0, 1}(rng));
}

Verdict distribution_recovery() {
  Rng rng{20240517};
  const double epoch = 1704067200.0;

  // "Empirical" observations.
  std::array<std::vector<double>, 5> train_obs;
  for (int i = 0; i < 20000; ++i) {
    const auto f = draw_framework(rng);
    train_obs[f].push_back(draw_train(f, rng));
  }
  std::vector<double> stamps{epoch};
  while (stamps.back() < epoch + 28 * 86400.0) stamps.push_back(stamps.back() + draw_interarrival(stamps.back(), rng));
  const int n_assets = 5000;
  Eigen::MatrixXd assets(n_assets, 3);
  std::vector<double> log_cells(n_assets), log_secs(n_assets);
  for (int i = 0; i < n_assets; ++i) {
    const auto a = draw_asset(rng);
    assets.row(i) << std::log(a.rows), std::log(a.cols), std::log(a.bytes);
    log_cells[static_cast<std::size_t>(i)] = std::log(a.rows * a.cols);
    log_secs[static_cast<std::size_t>(i)] = std::log(draw_preprocess(a.rows * a.cols, rng));
  }

  // Fit with the stats module, as `pipesim fit` does.
  auto set = defaults::model_set();
  for (std::size_t f = 0; f < 5; ++f) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(train_obs[f].size()), 1);
    for (std::size_t i = 0; i < train_obs[f].size(); ++i) x(static_cast<Eigen::Index>(i), 0) = std::log(train_obs[f][i]);
    set.gmms[engine::train_model_name(kFrameworks[f])] = stats::fit_gmm(x, 2, 7 + f);
  }
  set.profiles["fitted"] = stats::fit_arrival_profile(stamps, 0.0);
  set.gmms["assets"] = stats::fit_gmm(assets, 5, 11);
  set.curves["preprocess"] = stats::fit_exp_curve(log_cells, log_secs);

  // Simulate four weeks on the fitted models.
  const auto cfg = parse_config(R"(
[experiment]
run_id = recovery
seed = 99
horizon_days = 28
models = unused.models
trace = false

[arrival]
mode = profile
profile = fitted
)" + resources(64, 256),
                                kSource);
  const Experiment exp{cfg, set};
  trace::SeriesCollector series;
  exp.simulation(cfg.seed)->run(series);

  // Generator references, drawn fresh.
  Rng ref_rng{777};
  std::vector<double> ref_train, ref_ia, ref_pre;
  for (int i = 0; i < 400000; ++i) ref_train.push_back(draw_train(draw_framework(ref_rng), ref_rng));
  for (double t = epoch; ref_ia.size() < 400000;) {
    const double d = draw_interarrival(t, ref_rng);
    ref_ia.push_back(d);
    t += d;
  }
  for (int i = 0; i < 400000; ++i) {
    const auto a = draw_asset(ref_rng);
    ref_pre.push_back(draw_preprocess(a.rows * a.cols, ref_rng));
  }

  double p_train = 0, p_ia = 0, p_pre = 0;
  const auto& sim_train = series.series("train_exec");
  const auto& sim_ia = series.series("interarrival");
  const auto& sim_pre = series.series("preprocess_exec");
  const double g_train = max_rel_quantile_gap(sim_train, ref_train, &p_train);
  const double g_ia = max_rel_quantile_gap(sim_ia, ref_ia, &p_ia);
  const double g_pre = max_rel_quantile_gap(sim_pre, ref_pre, &p_pre);
  const bool pass = g_train <= 0.10 && g_ia <= 0.10 && g_pre <= 0.20 && sim_train.size() > 10000 && sim_pre.size() > 10000;
  return {pass, fmt("max relative quantile gap over p=0.05..0.95: train %.2f%% at p=%.2f (n=%zu, limit 10%%), "
                    "interarrival %.2f%% at p=%.2f (n=%zu, limit 10%%), preprocess %.2f%% at p=%.2f (n=%zu, limit 20%%)",
                    100 * g_train, p_train, sim_train.size(), 100 * g_ia, p_ia, sim_ia.size(), 100 * g_pre, p_pre,
                    sim_pre.size())};
}

// ---------------------------------------------------------------- 6. arrival-profile fidelity

Verdict profile_fidelity() {
  const auto cfg = parse_config(R"(
[experiment]
run_id = fidelity
seed = 6
horizon_days = 28
models = models/default.models
trace = false

[arrival]
mode = profile
profile = default
)" + resources(64, 256),
                                kSource);
  const Experiment exp{cfg, stats::load_model_file(kModels.string())};
  trace::ArrivalHeatmap heatmap;
  exp.simulation(cfg.seed)->run(heatmap);
  const auto cells = heatmap.cells();
  const auto& profile = exp.model_set().profiles.at("default");

  // Expected count: 3600 / mean interarrival. Standard error from renewal
  // theory, Var N(t) ~ t * var / mean^3, over the observed hour instances.
  int within = 0, within_empirical = 0;
  std::uint64_t min_hours = UINT64_MAX;
  double worst_z = 0.0;
  for (int wd = 0; wd < stats::kWeekdays; ++wd)
    for (int h = 0; h < stats::kHours; ++h) {
      const auto& c = cells[static_cast<std::size_t>(wd * stats::kHours + h)];
      const auto& d = profile.cell(wd, h).dist;
      const double mean = d.mean() / profile.rate_factor;
      const double var = d.variance() / (profile.rate_factor * profile.rate_factor);
      const double expected = 3600.0 / mean;
      const double n = static_cast<double>(c.hours);
      const double se = std::sqrt(3600.0 * var / (mean * mean * mean) / n);
      const double z = std::abs(c.mean - expected) / se;
      worst_z = std::max(worst_z, z);
      if (z <= 3.0) ++within;
      if (c.hours > 1 && std::abs(c.mean - expected) <= 3.0 * c.sd / std::sqrt(n)) ++within_empirical;
      min_hours = std::min(min_hours, c.hours);
    }
  const bool pass = within >= 0.9 * stats::kCells && min_hours >= 4;
  return {pass, fmt("%d/168 cells within 3 SE (need >= 152; %.1f%%), worst |z| = %.2f, %llu hour instances per cell; "
                    "with the sample SE instead: %d/168",
                    within, 100.0 * within / stats::kCells, worst_z, static_cast<unsigned long long>(min_hours),
                    within_empirical)};
}

// ---------------------------------------------------------------- 7. queueing oracle

engine::Executor hold(int resource, std::function<double(Rng&)> seconds) {
  return [resource, seconds](const TaskSpec&, engine::PipelineState&, engine::ExecutionContext& ctx) {
    engine::TaskPlan p;
    p.ops = {{SysOpKind::req, resource, {}, {}},
             {SysOpKind::exec, resource, SimTime::from_seconds(seconds(ctx.rng->durations)), {}},
             {SysOpKind::rel, resource, {}, {}}};
    return p;
  };
}

engine::EngineConfig queue_config(double horizon, std::uint32_t capacity, std::uint64_t seed) {
  engine::EngineConfig c;
  c.run_id = "queue";
  c.seed = seed;
  c.horizon = SimTime::from_seconds(horizon);
  c.resources = {{"compute", ResourceKind::compute, 1, 0, 0},
                 {"training", ResourceKind::training, capacity, 0, 0},
                 {"datastore", ResourceKind::datastore, 1, 1e9, 0.0}};
  return c;
}

Verdict queueing(const Scratch& tmp) {
  engine::EngineModels models = engine::bind_models(defaults::model_set());
  const DataAsset asset{0, 10, 100, 8000}; // id, cols, rows, bytes
  const std::vector<TaskSpec> one_train{TaskSpec::train(0, Framework::SparkML, 0)};

  // FIFO oracle, read back from the trace file.
  auto reg = engine::ExecutorRegistry::defaults();
  reg.set(TaskType::train, hold(1, [](Rng&) { return 5.0; }));
  const auto path = (tmp / "fifo.ndjson").string();
  {
    engine::Simulation sim{queue_config(100, 1, 1), models, synth::SynthConfig{}, reg,
                           std::make_unique<engine::ScriptedArrivals>(std::vector<double>{0, 1, 2}),
                           std::make_unique<engine::FixedPipelineSource>(one_train, asset)};
    trace::NdjsonWriter writer{path};
    sim.run(writer);
  }
  trace::SeriesCollector fifo;
  trace::read_trace_file(path, fifo);
  const auto waits = fifo.series("wait");
  const bool fifo_ok = waits == std::vector<double>{0, 4, 8};

  // Little's law on M/M/4: the engine integrates queue length over time;
  // lambda and W come from the trace.
  const double lambda = 1.0, mu = 0.3;
  auto mm = engine::ExecutorRegistry::defaults();
  mm.set(TaskType::train, hold(1, [mu](Rng& r) { return std::exponential_distribution<double>{mu}(r); }));
  engine::Simulation sim{queue_config(1.02e5, 4, 9), models, synth::SynthConfig{}, mm,
                         std::make_unique<engine::FixedArrivals>(stats::Distribution::exponential(lambda)),
                         std::make_unique<engine::FixedPipelineSource>(one_train, asset)};
  trace::SeriesCollector series;
  const auto summary = sim.run(series);
  const auto& u = *summary.resource("training");
  const auto& w = series.series("wait");
  const double W = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  const double lam = static_cast<double>(summary.pipelines.arrived) / summary.horizon_s;
  const double L = u.mean_queue_length;
  const double rel = std::abs(L - lam * W) / (lam * W);
  const bool little_ok = rel <= 0.10 && summary.pipelines.arrived >= 100000;

  std::string got;
  for (double x : waits) got += fmt("%s%g", got.empty() ? "" : "/", x);
  return {fifo_ok && little_ok,
          fmt("FIFO waits %s s (want 0/4/8); M/M/4 rho=%.2f over %llu arrivals: L = %.4f, lambda*W = %.4f, gap %.2f%% "
              "(limit 10%%)",
              got.c_str(), lambda / (4 * mu), static_cast<unsigned long long>(summary.pipelines.arrived), L, lam * W,
              100 * rel)};
}

// ---------------------------------------------------------------- 8. determinism

Verdict determinism(const Scratch& tmp) {
  const auto cfg_path = tmp / "determinism.cfg";
  std::ofstream{cfg_path} << "[experiment]\nrun_id = det\nseed = 8\nhorizon_days = 2\nmodels = " << kModels.string()
                          << "\nprogress = false\n\n[arrival]\nmode = profile\nprofile = default\n"
                          << resources(2, 3);

  auto run = [&](const std::string& dir, unsigned reps, unsigned parallel) {
    ::setenv("PIPESIM_OUTPUT", (tmp / dir).c_str(), 1);
    cli::RunOptions o;
    o.config = cfg_path;
    o.replications = reps;
    o.parallel = parallel;
    o.quiet = true;
    std::ostringstream out, err;
    const int code = cli::cmd_run(o, out, err);
    ::unsetenv("PIPESIM_OUTPUT");
    if (code != 0) throw std::runtime_error("run failed: " + err.str());
  };
  run("det-a", 3, 1);
  run("det-b", 3, 1);
  run("det-c", 3, 3);
  run("det-single", 1, 1);

  int compared = 0, identical = 0;
  std::size_t bytes = 0;
  auto same = [&](const fs::path& a, const fs::path& b) {
    const auto x = slurp(a), y = slurp(b);
    ++compared;
    if (!x.empty() && x == y) ++identical;
    bytes = std::max(bytes, x.size());
  };
  for (int i = 0; i < 3; ++i) {
    const std::string rep = "rep-" + std::to_string(i);
    same(tmp / "det-a" / rep / "trace.ndjson", tmp / "det-b" / rep / "trace.ndjson");
    same(tmp / "det-a" / rep / "trace.ndjson", tmp / "det-c" / rep / "trace.ndjson");
  }
  same(tmp / "det-a" / "rep-0" / "trace.ndjson", tmp / "det-single" / "trace.ndjson");
  const bool distinct = slurp(tmp / "det-a" / "rep-0" / "trace.ndjson") != slurp(tmp / "det-a" / "rep-1" / "trace.ndjson");
  return {identical == compared && distinct,
          fmt("%d/%d trace pairs byte-identical (two runs, --parallel 1 vs 3, replication 0 vs a single run; "
              "largest %zu bytes); replications differ from each other: %s",
              identical, compared, bytes, distinct ? "yes" : "no")};
}

// ---------------------------------------------------------------- 9. invariants

struct PipelineLog final : engine::RunObserver {
  std::vector<engine::PipelineRecord> pipelines;
  void on_pipeline(const engine::PipelineRecord& r) override { pipelines.push_back(r); }
};

/// Task-level additivity checked against the raw trace, without keeping it.
class OpSums final : public trace::TraceSink {
public:
  void append(const trace::TraceRecord& r) override {
    sums_[std::make_pair(r.pipeline_id, r.task_id)] += r.duration();
  }
  SimTime at(std::uint64_t p, std::uint32_t t) const {
    const auto it = sums_.find(std::make_pair(p, t));
    return it == sums_.end() ? SimTime{} : it->second;
  }

private:
  std::map<std::pair<std::uint64_t, std::uint32_t>, SimTime> sums_;
};

Verdict invariants() {
  const auto set = stats::load_model_file(kModels.string());
  std::mt19937_64 rng{909};
  std::size_t cap = 0, fifo = 0, additivity = 0, records = 0, pipelines = 0, contended = 0;
  const int scenarios = 8;
  for (int s = 0; s < scenarios; ++s) {
    const unsigned compute = 1 + static_cast<unsigned>(rng() % 4);
    const unsigned training = 1 + static_cast<unsigned>(rng() % 6);
    const double mean_ia = std::uniform_real_distribution<double>{15, 120}(rng);
    const double p_compress = std::uniform_real_distribution<double>{0, 0.5}(rng);
    const double p_harden = std::uniform_real_distribution<double>{0, 0.5}(rng);
    const bool profile = s % 2 == 1;
    const auto text =
        fmt("[experiment]\nrun_id = prop%d\nseed = %llu\nhorizon_days = 3\nmodels = m.models\n\n[arrival]\n", s,
            static_cast<unsigned long long>(rng() % 100000)) +
        (profile ? std::string("mode = profile\nprofile = default\n") : fmt("mean_interarrival_s = %.3f\n", mean_ia)) +
        fmt("\n[synth]\np_compress = %.3f\np_harden = %.3f\n", p_compress, p_harden) + resources(compute, training);
    const auto cfg = parse_config(text, kSource);
    const Experiment exp{cfg, set};
    trace::InvariantChecker checker;
    OpSums sums;
    PipelineLog log;
    trace::TeeSink tee{std::vector<trace::TraceSink*>{&checker, &sums}};
    const auto summary = exp.simulation(cfg.seed)->run(tee, &log);
    cap += checker.capacity_violations();
    fifo += checker.fifo_violations();
    records += summary.records;
    if (summary.wait.max > 0) ++contended;
    for (const auto& p : log.pipelines) {
      ++pipelines;
      SimTime total{};
      for (const auto& t : p.tasks) {
        if (t.duration() != sums.at(p.id, t.task_id)) ++additivity;
        total += t.duration();
      }
      if (total != p.total_duration || p.total_duration != p.end - p.arrival) ++additivity;
    }
    const auto& c = summary.pipelines;
    if (c.arrived != c.completed + c.gate_failed + c.truncated + c.in_queue || c.arrived != log.pipelines.size())
      ++additivity;
  }

  // Asset floor.
  const stats::GmmSampler assets{set.gmms.at("assets")};
  Rng arng = make_stream(3, "assets");
  std::size_t floor_violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto a = synth::synth_data_asset(assets, arng, static_cast<std::uint64_t>(i));
    if (a.rows < 50 || a.cols < 2) ++floor_violations;
  }

  // Fail-closed parsing: every key and section of every bundled config,
  // misspelled, must be rejected.
  std::size_t mutations = 0, rejected = 0;
  for (const char* name : {"smoke.cfg", "paper-year.cfg", "peak.cfg"}) {
    std::istringstream in{slurp(kSource / "configs" / name)};
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto& l = lines[i];
      if (l.empty() || l[0] == ';') continue;
      for (const char* junk : {"x", "_", "Q"}) {
        auto copy = lines;
        if (l[0] == '[') {
          copy[i] = "[" + std::string(junk) + l.substr(1);
        } else {
          const auto eq = l.find('=');
          if (eq == std::string::npos) continue;
          copy[i] = l.substr(0, eq / 2) + junk + l.substr(eq / 2);
        }
        std::string text;
        for (const auto& c : copy) text += c + "\n";
        ++mutations;
        try {
          parse_config(text, kSource / "configs");
        } catch (const ConfigInvalid&) {
          ++rejected;
        }
      }
    }
  }

  const bool pass = cap == 0 && fifo == 0 && additivity == 0 && floor_violations == 0 && rejected == mutations &&
                    contended >= scenarios / 2 && mutations > 100;
  return {pass, fmt("%d random scenarios (%zu contended), %zu pipelines, %zu records: capacity violations %zu, FIFO "
                    "violations %zu, additivity mismatches %zu; asset floor violations %zu/100000; config mutations "
                    "rejected %zu/%zu",
                    scenarios, contended, pipelines, records, cap, fifo, additivity, floor_violations, rejected,
                    mutations)};
}

} // namespace

int main() {
  const Scratch tmp;
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  // Performance runs first so peak RSS reflects the year-long run alone.
  const std::vector<Criterion> criteria{
      {1, "performance", [&] { return performance(tmp); }},
      {2, "linear scaling", [&] { return scaling(tmp); }},
      {3, "framework mix", framework_mix},
      {4, "compression table", compression_table},
      {5, "distribution recovery", distribution_recovery},
      {6, "arrival-profile fidelity", profile_fidelity},
      {7, "queueing oracle", [&] { return queueing(tmp); }},
      {8, "determinism", [&] { return determinism(tmp); }},
      {9, "invariant suite", invariants},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s  %d %-25s %s  [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
