#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "pipesim/cli.hpp"

using namespace pipesim;
namespace fs = std::filesystem;

namespace {

const fs::path kSource{PIPESIM_SOURCE_DIR};

std::string slurp(const fs::path& p) {
  std::ifstream in{p, std::ios::binary};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh directory under the system temp dir, removed afterwards.
struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("pipesim_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& s) const { return path / s; }
};

struct Out {
  std::ostringstream out, err;
};

int run_config(const fs::path& cfg, const fs::path& out_dir, Out& o, unsigned reps = 1, unsigned par = 1) {
  ::setenv("PIPESIM_OUTPUT", out_dir.c_str(), 1);
  cli::RunOptions r;
  r.config = cfg;
  r.replications = reps;
  r.parallel = par;
  r.quiet = true;
  const int code = cli::cmd_run(r, o.out, o.err);
  ::unsetenv("PIPESIM_OUTPUT");
  return code;
}

/// Writes a config next to a copy of the default models.
fs::path write_config(const TempDir& d, const std::string& body) {
  const auto cfg = d / "exp.cfg";
  std::ofstream{cfg} << body;
  return cfg;
}

const std::string kResources = R"(
[resource.compute]
kind = compute
capacity = 4

[resource.training]
kind = training
capacity = 4

[resource.datastore]
kind = datastore
bandwidth_bytes_per_s = 5e8
latency_s = 0.05
)";

} // namespace

TEST(CliRun, SmokeConfigCompletes) {
  TempDir d;
  Out o;
  ASSERT_EQ(run_config(kSource / "configs" / "smoke.cfg", d.path, o), cli::kOk) << o.err.str();
  for (const char* f : {"trace.ndjson", "summary.txt", "utilization.csv", "arrivals_heatmap.csv", "lineage.csv"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  EXPECT_NE(o.out.str().find("wall-clock:"), std::string::npos);
  EXPECT_NE(o.out.str().find("peak memory:"), std::string::npos);
  const auto s = trace::summarize_file((d / "trace.ndjson").string());
  EXPECT_GT(s.pipelines.completed, 0u);
}

TEST(CliRun, SameSeedSameTraceBytes) {
  TempDir a, b;
  Out o1, o2;
  ASSERT_EQ(run_config(kSource / "configs" / "smoke.cfg", a.path, o1), cli::kOk);
  ASSERT_EQ(run_config(kSource / "configs" / "smoke.cfg", b.path, o2), cli::kOk);
  EXPECT_EQ(slurp(a / "trace.ndjson"), slurp(b / "trace.ndjson"));
  EXPECT_EQ(slurp(a / "lineage.csv"), slurp(b / "lineage.csv"));
}

TEST(CliRun, ReplicationsIgnoreParallelism) {
  TempDir serial, parallel;
  Out o1, o2;
  ASSERT_EQ(run_config(kSource / "configs" / "smoke.cfg", serial.path, o1, 4, 1), cli::kOk) << o1.err.str();
  ASSERT_EQ(run_config(kSource / "configs" / "smoke.cfg", parallel.path, o2, 4, 3), cli::kOk) << o2.err.str();
  std::set<std::string> distinct;
  for (int i = 0; i < 4; ++i) {
    const auto name = "rep-" + std::to_string(i);
    const auto t = slurp(serial.path / name / "trace.ndjson");
    EXPECT_FALSE(t.empty());
    EXPECT_EQ(t, slurp(parallel.path / name / "trace.ndjson")) << name;
    distinct.insert(t);
  }
  EXPECT_EQ(distinct.size(), 4u);
  // Replication 0 keeps the base seed.
  TempDir single;
  Out o3;
  ASSERT_EQ(run_config(kSource / "configs" / "smoke.cfg", single.path, o3), cli::kOk);
  EXPECT_EQ(slurp(single / "trace.ndjson"), slurp(serial.path / "rep-0" / "trace.ndjson"));
}

TEST(CliRun, ExitCodes) {
  TempDir d;
  Out o;
  EXPECT_EQ(run_config(d / "nope.cfg", d.path, o), cli::kInputError);

  auto bad_key = write_config(d, "[experiment]\nhorizon_s = 10\nmodels = m.models\nhorizn = 3\n" + kResources);
  EXPECT_EQ(run_config(bad_key, d.path, o), cli::kInputError);

  auto no_models = write_config(d, "[experiment]\nhorizon_s = 10\nmodels = missing.models\n" + kResources);
  EXPECT_EQ(run_config(no_models, d.path, o), cli::kMissingDependency);

  auto set = defaults::model_set();
  set.gmms.erase("evaluate");
  stats::write_model_file((d / "partial.models").string(), set);
  auto partial = write_config(d, "[experiment]\nhorizon_s = 10\nmodels = partial.models\n" + kResources);
  EXPECT_EQ(run_config(partial, d.path, o), cli::kMissingDependency);
  EXPECT_NE(o.err.str().find("evaluate"), std::string::npos);

  std::ofstream{d / "corrupt.models"} << "pipesim-models v1\n[gmm x]\nk = 1\n";
  auto corrupt = write_config(d, "[experiment]\nhorizon_s = 10\nmodels = corrupt.models\n" + kResources);
  EXPECT_EQ(run_config(corrupt, d.path, o), cli::kInputError);
}

// ---------------------------------------------------------------- fit

TEST(CliFit, TooFewAssetRowsIsAFitFailure) {
  TempDir d;
  std::ofstream{d / "assets.csv"} << "rows,cols,bytes\n100,5,4000\n200,6,9000\n300,7,15000\n150,3,3000\n900,9,60000\n";
  cli::FitOptions f;
  f.input = d / "assets.csv";
  f.kind = cli::FitKind::assets;
  f.out = d / "m.models";
  Out o;
  EXPECT_EQ(cli::cmd_fit(f, o.out, o.err), cli::kFitFailure);
  EXPECT_NE(o.err.str().find("TooFewSamples"), std::string::npos);
}

TEST(CliFit, SchemaErrorsAreInputErrors) {
  TempDir d;
  std::ofstream{d / "a.csv"} << "rows,columns,bytes\n1,2,3\n";
  std::ofstream{d / "b.csv"} << "rows,cols,bytes\n1,2\n";
  std::ofstream{d / "c.csv"} << "timestamp_epoch_s\nnoon\n";
  Out o;
  cli::FitOptions f;
  f.out = d / "m.models";
  f.input = d / "a.csv";
  EXPECT_EQ(cli::cmd_fit(f, o.out, o.err), cli::kInputError);
  f.input = d / "b.csv";
  EXPECT_EQ(cli::cmd_fit(f, o.out, o.err), cli::kInputError);
  f.input = d / "c.csv";
  f.kind = cli::FitKind::arrivals;
  EXPECT_EQ(cli::cmd_fit(f, o.out, o.err), cli::kInputError);
  EXPECT_FALSE(fs::exists(f.out));
}

TEST(CliFit, FourWeeksOfArrivalsGiveAFullProfile) {
  TempDir d;
  {
    std::ofstream csv{d / "arrivals.csv"};
    csv << "timestamp_epoch_s\n";
    std::mt19937_64 rng{11};
    double t = 1704067200.0;
    const double end = t + 28 * 86400.0;
    while (t < end) {
      csv << text::format_real(t) << "\n";
      t += std::exponential_distribution<double>{1.0 / 30.0}(rng);
    }
  }
  cli::FitOptions f;
  f.input = d / "arrivals.csv";
  f.kind = cli::FitKind::arrivals;
  f.out = d / "m.models";
  Out o;
  ASSERT_EQ(cli::cmd_fit(f, o.out, o.err), cli::kOk) << o.err.str();
  const auto set = stats::load_model_file(f.out.string());
  ASSERT_EQ(set.profiles.count("default"), 1u);
  const auto& p = set.profiles.at("default");
  EXPECT_EQ(p.clusters.size(), 168u);
  for (bool inherited : p.inherited) EXPECT_FALSE(inherited);
  EXPECT_NE(o.out.str().find("clusters=168"), std::string::npos);
}

TEST(CliFit, CurveRecoversItsGenerator) {
  const stats::ExpCurve truth{0.018, 1.330, 2.156, 0.0, 0.0, stats::CurveSpace::log_seconds};
  for (double sigma : {0.0, 0.15}) {
    TempDir d;
    {
      std::ofstream csv{d / "curve.csv"};
      csv << "cells,duration_s\n";
      std::mt19937_64 rng{3};
      for (int i = 0; i < 4000; ++i) {
        const double cells = std::exp(std::uniform_real_distribution<double>{std::log(1e3), std::log(1e9)}(rng));
        const double noise = sigma > 0 ? std::exp(std::normal_distribution<double>{0.0, sigma}(rng)) : 1.0;
        csv << text::format_real(cells) << "," << text::format_real(truth.deterministic_seconds(cells) * noise) << "\n";
      }
    }
    cli::FitOptions f;
    f.input = d / "curve.csv";
    f.kind = cli::FitKind::curve;
    f.out = d / "m.models";
    Out o;
    ASSERT_EQ(cli::cmd_fit(f, o.out, o.err), cli::kOk) << o.err.str();
    const auto c = stats::load_model_file(f.out.string()).curves.at("preprocess");
    EXPECT_NEAR(c.a / truth.a, 1.0, 0.01) << "sigma " << sigma << ": " << o.out.str();
    EXPECT_NEAR(c.b / truth.b, 1.0, 0.01) << "sigma " << sigma;
    EXPECT_NEAR(c.c / truth.c, 1.0, 0.01) << "sigma " << sigma;
    EXPECT_NEAR(c.noise_sigma, sigma, 0.01);
  }
}

TEST(CliFit, DurationsSplitByFramework) {
  TempDir d;
  {
    std::ofstream csv{d / "train.csv"};
    csv << "framework,duration_s\n";
    std::mt19937_64 rng{8};
    for (int i = 0; i < 600; ++i) {
      csv << "SparkML," << std::exp(std::normal_distribution<double>{std::log(10.0), 0.5}(rng)) << "\n";
      csv << "TensorFlow," << std::exp(std::normal_distribution<double>{std::log(600.0), 0.5}(rng)) << "\n";
    }
  }
  cli::FitOptions f;
  f.input = d / "train.csv";
  f.kind = cli::FitKind::durations;
  f.out = d / "m.models";
  f.merge = true;
  stats::ModelSet base;
  base.curves["preprocess"] = defaults::preprocess_curve();
  stats::write_model_file(f.out.string(), base);
  Out o;
  ASSERT_EQ(cli::cmd_fit(f, o.out, o.err), cli::kOk) << o.err.str();
  const auto set = stats::load_model_file(f.out.string());
  EXPECT_EQ(set.curves.count("preprocess"), 1u); // merged, not replaced
  ASSERT_EQ(set.gmms.count("train.SparkML"), 1u);
  ASSERT_EQ(set.gmms.count("train.TensorFlow"), 1u);
  const auto& tf = set.gmms.at("train.TensorFlow");
  double mean = 0;
  for (std::size_t j = 0; j < tf.k(); ++j) mean += tf.weights[j] * tf.means[j](0);
  EXPECT_NEAR(mean, std::log(600.0), 0.08);
}

// ---------------------------------------------------------------- report

TEST(CliReport, SummaryOfTheFifoOracle) {
  TempDir d;
  {
    std::ofstream t{d / "fifo.ndjson"};
    t << "pipesim-trace v1 run=fifo seed=1 horizon=20 resources=gpu:training:1\n";
    const struct {
      int p;
      double req, grant;
    } jobs[] = {{0, 0, 0}, {1, 1, 5}, {2, 2, 10}};
    // Records in completion order, as the engine emits them.
    auto rec = [&](int p, const char* op, const char* res, double a, double b) {
      char line[400];
      std::snprintf(line, sizeof line,
                    "{\"run\":\"fifo\",\"pipeline\":%d,\"task\":0,\"type\":\"train\",\"op\":\"%s\",\"resource\":%s,"
                    "\"t_start\":%.6f,\"t_end\":%.6f,\"bytes\":null,\"status\":\"ok\"}\n",
                    p, op, res, a, b);
      return std::string{line};
    };
    std::vector<std::pair<double, std::string>> lines;
    for (const auto& j : jobs) {
      lines.emplace_back(j.grant, rec(j.p, "req", "\"gpu\"", j.req, j.grant));
      lines.emplace_back(j.grant + 5, rec(j.p, "exec", "\"gpu\"", j.grant, j.grant + 5));
      lines.emplace_back(j.grant + 5, rec(j.p, "rel", "\"gpu\"", j.grant + 5, j.grant + 5));
    }
    std::stable_sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [k, l] : lines) t << l;
  }
  cli::ReportOptions r;
  r.trace = d / "fifo.ndjson";
  r.summary = true;
  Out o;
  ASSERT_EQ(cli::cmd_report(r, o.out, o.err), cli::kOk) << o.err.str();
  const auto s = trace::summarize_file(r.trace.string());
  EXPECT_DOUBLE_EQ(s.wait.mean, 4.0);
  EXPECT_DOUBLE_EQ(s.resource("gpu")->utilization, 0.75);
  EXPECT_TRUE(fs::exists(d / "summary.txt"));
  EXPECT_NE(o.out.str().find("wait"), std::string::npos);
}

TEST(CliReport, UniformWeekGivesAConstantHeatmap) {
  TempDir d;
  std::filesystem::copy(kSource / "models" / "default.models", d / "default.models");
  auto cfg = write_config(d, "[experiment]\nhorizon_days = 7\nmodels = default.models\n"
                             "[arrival]\ninterarrival = constant(120)\n" + kResources);
  Out o;
  ASSERT_EQ(run_config(cfg, d / "run", o), cli::kOk) << o.err.str();
  cli::ReportOptions r;
  r.trace = d / "run" / "trace.ndjson";
  r.heatmap = true;
  r.out_dir = d / "report";
  ASSERT_EQ(cli::cmd_report(r, o.out, o.err), cli::kOk) << o.err.str();
  std::ifstream in{d / "report" / "arrivals_heatmap.csv"};
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "weekday,hour,mean_arrivals,sd,hours");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto cells = text::split(line, ',');
    ASSERT_EQ(cells.size(), 5u);
    EXPECT_EQ(*text::parse_double(cells[2]), 30.0) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 168);
}

TEST(CliReport, QqAgainstTheModel) {
  TempDir d;
  Out o;
  ASSERT_EQ(run_config(kSource / "configs" / "smoke.cfg", d / "run", o), cli::kOk);
  cli::ReportOptions r;
  r.trace = d / "run" / "trace.ndjson";
  r.qq = {"train_duration"};
  r.against = "model";
  r.config = kSource / "configs" / "smoke.cfg";
  r.quantiles = 19;
  ASSERT_EQ(cli::cmd_report(r, o.out, o.err), cli::kOk) << o.err.str();
  std::ifstream in{d / "run" / "qq_train_duration.csv"};
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "p,trace,model");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 19);

  r.qq = {"no_such_metric"};
  EXPECT_NE(cli::cmd_report(r, o.out, o.err), cli::kOk);
}

TEST(CliReport, MalformedTraceIsAnInputError) {
  TempDir d;
  std::ofstream{d / "bad.ndjson"} << "pipesim-trace v1 run=x seed=1\n{\"run\":\"x\",\"pipeline\":0}\n";
  cli::ReportOptions r;
  r.trace = d / "bad.ndjson";
  Out o;
  EXPECT_EQ(cli::cmd_report(r, o.out, o.err), cli::kInputError);
  EXPECT_NE(o.err.str().find("line 2"), std::string::npos) << o.err.str();
  std::ofstream{d / "v2.ndjson"} << "pipesim-trace v2 run=x seed=1\n";
  r.trace = d / "v2.ndjson";
  EXPECT_EQ(cli::cmd_report(r, o.out, o.err), cli::kInputError);
}

TEST(CliDefaults, WritesTheShippedModelFile) {
  TempDir d;
  Out o;
  ASSERT_EQ(cli::cmd_defaults(d / "m.models", o.out, o.err), cli::kOk);
  EXPECT_EQ(slurp(d / "m.models"), slurp(kSource / "models" / "default.models"));
}
