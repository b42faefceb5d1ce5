#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "pipesim/engine/compression.hpp"
#include "pipesim/engine/simulation.hpp"
#include "pipesim/trace/analytics.hpp"

using namespace pipesim;
using namespace pipesim::engine;
using stats::Distribution;
using stats::GmmModel;
using stats::GmmSampler;

namespace {

// One-dimensional mixture concentrated on ln(seconds).
GmmSampler point_duration(double seconds) {
  GmmModel g;
  g.weights = {1.0};
  g.means = {Eigen::VectorXd::Constant(1, std::log(seconds))};
  g.covariances = {Eigen::MatrixXd::Constant(1, 1, 1e-22)};
  return GmmSampler{g};
}

std::vector<Resource> basic_resources(std::uint32_t compute = 2, std::uint32_t training = 2) {
  return {{"compute", ResourceKind::compute, compute, 0, 0},
          {"training", ResourceKind::training, training, 0, 0},
          {"datastore", ResourceKind::datastore, 1, 1e9, 0.0}};
}

EngineConfig basic_config(double horizon, std::uint64_t seed = 1) {
  EngineConfig c;
  c.run_id = "test";
  c.seed = seed;
  c.horizon = SimTime::from_seconds(horizon);
  c.resources = basic_resources();
  return c;
}

EngineModels point_models(double train_s = 100, double eval_s = 10) {
  EngineModels m;
  m.preprocess_curve = stats::ExpCurve{0.018, 1.330, 2.156, -1.0, 0.15, stats::CurveSpace::log_seconds};
  for (auto& t : m.train) t = point_duration(train_s);
  m.evaluate = point_duration(eval_s);
  return m;
}

/// Executor that holds `resource` for a fixed exec time.
Executor fixed_exec(int resource, double seconds) {
  return [resource, seconds](const TaskSpec&, PipelineState&, ExecutionContext&) {
    TaskPlan p;
    p.ops = {{SysOpKind::req, resource, {}, {}},
             {SysOpKind::exec, resource, SimTime::from_seconds(seconds), {}},
             {SysOpKind::rel, resource, {}, {}}};
    return p;
  };
}

struct Collect : RunObserver {
  std::vector<PipelineRecord> pipelines;
  std::vector<std::pair<TrainedModel, SimTime>> models;
  void on_pipeline(const PipelineRecord& r) override { pipelines.push_back(r); }
  void on_model(const TrainedModel& m, SimTime t) override { models.emplace_back(m, t); }
};

std::string render(const trace::MemorySink& s) {
  std::string out = trace::format_header(s.header) + "\n";
  for (const auto& r : s.records) trace::append_record(out, r);
  return out;
}

struct RunOut {
  trace::MemorySink trace;
  trace::RunSummary summary;
  Collect observed;
};

std::unique_ptr<RunOut> run_fixed(EngineConfig cfg, const EngineModels& models, std::vector<TaskSpec> tasks,
                               std::unique_ptr<ArrivalSource> arrivals, ExecutorRegistry reg = ExecutorRegistry::defaults(),
                               DataAsset asset = DataAsset{0, 10, 1000, 80000}) {
  auto out = std::make_unique<RunOut>();
  Simulation sim{std::move(cfg), models, synth::SynthConfig{}, std::move(reg), std::move(arrivals),
                 std::make_unique<FixedPipelineSource>(std::move(tasks), asset)};
  out->summary = sim.run(out->trace, &out->observed);
  return out;
}

std::vector<TaskSpec> full_chain(Framework f = Framework::SparkML, double gate = 0.0, double prune = 0.4) {
  return {TaskSpec::preprocess(0, 0), TaskSpec::train(0, f, 0), TaskSpec::evaluate(0, gate),
          TaskSpec::compress(0, prune), TaskSpec::harden(0), TaskSpec::deploy(0)};
}

} // namespace

// ---------------------------------------------------------------- compression table

TEST(ApplyCompression, PruneZeroIsIdentity) {
  TrainedModel m;
  m.performance = 0.8;
  m.size_bytes = 1e6;
  m.inference_ms = 12;
  for (const auto* p : {&googlenet_profile(), &resnet50_profile()}) {
    const auto out = apply_compression(m, 0.0, *p);
    EXPECT_EQ(out.performance, m.performance);
    EXPECT_EQ(out.size_bytes, m.size_bytes);
    EXPECT_EQ(out.inference_ms, m.inference_ms);
    EXPECT_EQ(out.version, m.version + 1);
    EXPECT_EQ(out.lineage, m.lineage);
  }
}

TEST(ApplyCompression, GoogleNetAtEightyPercent) {
  TrainedModel m;
  m.performance = 0.5;
  m.size_bytes = 1e6;
  m.inference_ms = 100;
  const auto out = apply_compression(m, 0.8, googlenet_profile());
  EXPECT_NEAR(out.performance / m.performance, 69.8 / 80.7, 1e-12);
  EXPECT_NEAR(out.size_bytes / m.size_bytes, 8.5 / 42.5, 1e-12);
  EXPECT_NEAR(out.inference_ms / m.inference_ms, 71.0 / 128.0, 1e-12);
}

TEST(ApplyCompression, ResNet50AtFortyPercent) {
  TrainedModel m;
  m.size_bytes = 1e6;
  m.inference_ms = 100;
  const auto out = apply_compression(m, 0.4, resnet50_profile());
  EXPECT_NEAR(out.size_bytes / m.size_bytes, 65.2 / 91.1, 1e-12);
  EXPECT_NEAR(out.inference_ms / m.inference_ms, 169.0 / 223.0, 1e-12);
}

TEST(ApplyCompression, InterpolatesAndBoundsTheRange) {
  const auto k = googlenet_profile().multipliers(0.1);
  EXPECT_NEAR(k.size, (42.5 + 28.7) / 2 / 42.5, 1e-12);
  EXPECT_THROW(googlenet_profile().multipliers(0.85), PruneOutOfRange);
  EXPECT_THROW(googlenet_profile().multipliers(-0.1), PruneOutOfRange);
  TrainedModel m;
  m.performance = 0.999;
  m.size_bytes = 5e6;
  m.inference_ms = 40;
  for (int i = 0; i <= 80; ++i) {
    for (const auto* p : {&googlenet_profile(), &resnet50_profile()}) {
      const auto out = apply_compression(m, i / 100.0, *p);
      EXPECT_LE(out.size_bytes, m.size_bytes);
      EXPECT_LE(out.inference_ms, m.inference_ms);
      EXPECT_LE(out.performance, 1.0);
    }
  }
}

// ---------------------------------------------------------------- arrivals

TEST(Arrivals, ExponentialMeanInterarrival) {
  FixedArrivals src{Distribution::exponential(0.5)};
  Rng rng{12};
  const auto t = arrival_times(src, SimTime::from_seconds(2.2e5), rng);
  ASSERT_GT(t.size(), 100000u);
  const double mean = t[100000].seconds() / 100000.0;
  EXPECT_NEAR(mean, 2.0, 0.02);
  for (std::size_t i = 1; i < t.size(); ++i) ASSERT_LT(t[i - 1], t[i]);
}

TEST(Arrivals, InterarrivalFactorDoublesArrivals) {
  Rng a{3}, b{4};
  FixedArrivals base{Distribution::exponential(0.1)};
  FixedArrivals faster{Distribution::exponential(0.1), 0.5};
  const auto h = SimTime::from_seconds(2e6);
  const double n0 = static_cast<double>(arrival_times(base, h, a).size());
  const double n1 = static_cast<double>(arrival_times(faster, h, b).size());
  EXPECT_NEAR(n1 / n0, 2.0, 0.06);
}

TEST(Arrivals, FirstAtZeroAndHalfOpenHorizon) {
  FixedArrivals src{Distribution::constant(100)};
  Rng rng{1};
  const auto t = arrival_times(src, SimTime::from_seconds(1000), rng);
  ASSERT_EQ(t.size(), 10u);
  EXPECT_EQ(t.front(), SimTime{});
  EXPECT_EQ(t.back(), SimTime::from_seconds(900));
  EXPECT_THROW((ScriptedArrivals{{1.0, 1.0}}), InvalidArgument);
}

// ---------------------------------------------------------------- run

TEST(Run, ZeroHorizonIsEmpty) {
  const auto models = point_models();
  auto r = run_fixed(basic_config(0), models, full_chain(), std::make_unique<FixedArrivals>(Distribution::constant(10)));
  EXPECT_TRUE(r->trace.records.empty());
  EXPECT_EQ(r->summary.pipelines.arrived, 0u);
  EXPECT_EQ(r->summary.pipelines.completed, 0u);
  EXPECT_EQ(r->summary.wait.count, 0u);
  EXPECT_EQ(r->summary.mean_potential, 0.0);
  for (const auto& u : r->summary.resources) EXPECT_EQ(u.utilization, 0.0);
}

TEST(Run, FixedIntervalGivesExactlyTenArrivals) {
  const auto models = point_models(5, 1);
  auto r = run_fixed(basic_config(1000), models, {TaskSpec::train(0, Framework::SparkML, 0), TaskSpec::deploy(0)},
                     std::make_unique<FixedArrivals>(Distribution::constant(100)));
  EXPECT_EQ(r->summary.pipelines.arrived, 10u);
  EXPECT_EQ(r->summary.pipelines.completed, 10u);
  EXPECT_EQ(r->observed.pipelines.size(), 10u);
}

TEST(Run, SameSeedSameTrace) {
  const auto models = point_models();
  auto build = [&](std::uint64_t seed) {
    EngineModels m = models;
    m.train[0] = GmmSampler{[] {
      GmmModel g;
      g.weights = {0.5, 0.5};
      g.means = {Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 4.0)};
      g.covariances = {Eigen::MatrixXd::Constant(1, 1, 0.3), Eigen::MatrixXd::Constant(1, 1, 0.5)};
      return g;
    }()};
    return run_fixed(basic_config(20000, seed), m, full_chain(Framework::SparkML, 0.0),
                     std::make_unique<FixedArrivals>(Distribution::exponential(0.05)));
  };
  const auto a = build(7), b = build(7), c = build(8);
  EXPECT_EQ(render(a->trace), render(b->trace));
  EXPECT_NE(render(a->trace), render(c->trace));
}

TEST(Run, DeployOnlyPipelineTakesNoTime) {
  const auto models = point_models();
  auto r = run_fixed(basic_config(10), models, {TaskSpec::deploy(0)},
                     std::make_unique<ScriptedArrivals>(std::vector<double>{1.0}));
  ASSERT_EQ(r->observed.pipelines.size(), 1u);
  EXPECT_EQ(r->observed.pipelines[0].total_duration, SimTime{});
  EXPECT_EQ(r->observed.pipelines[0].outcome, PipelineOutcome::completed);
  EXPECT_EQ(r->summary.pipelines.completed, 1u);
}

TEST(Run, DurationsAddUpExactly) {
  const auto models = point_models();
  auto reg = ExecutorRegistry::defaults();
  reg.set(TaskType::preprocess, fixed_exec(0, 3));
  reg.set(TaskType::train, fixed_exec(1, 5));
  reg.set(TaskType::evaluate, fixed_exec(0, 2));
  auto r = run_fixed(basic_config(100), models,
                     {TaskSpec::preprocess(0, 0), TaskSpec::train(0, Framework::SparkML, 0), TaskSpec::evaluate(0, 0)},
                     std::make_unique<ScriptedArrivals>(std::vector<double>{0.0}), reg);
  ASSERT_EQ(r->observed.pipelines.size(), 1u);
  const auto& p = r->observed.pipelines[0];
  EXPECT_EQ(p.total_duration, SimTime::from_seconds(10));
  ASSERT_EQ(p.tasks.size(), 3u);
  EXPECT_EQ(p.tasks[0].duration(), SimTime::from_seconds(3));
  EXPECT_EQ(p.tasks[1].duration(), SimTime::from_seconds(5));
  EXPECT_EQ(p.tasks[2].duration(), SimTime::from_seconds(2));
}

TEST(Run, ReadTimeIsLatencyPlusBytesOverBandwidth) {
  auto cfg = basic_config(1000);
  cfg.resources[2] = {"datastore", ResourceKind::datastore, 1, 1e6, 0.1};
  const auto models = point_models();
  auto r = run_fixed(cfg, models, {TaskSpec::train(0, Framework::SparkML, 0)},
                     std::make_unique<ScriptedArrivals>(std::vector<double>{0.0}), ExecutorRegistry::defaults(),
                     DataAsset{0, 10, 1000, 1000000});
  bool seen = false;
  for (const auto& rec : r->trace.records)
    if (rec.op == SysOpKind::read) {
      EXPECT_EQ(rec.duration(), SimTime::from_seconds(1.1));
      EXPECT_EQ(rec.bytes, 1000000u);
      EXPECT_EQ(rec.resource, "datastore");
      seen = true;
    }
  EXPECT_TRUE(seen);
}

TEST(Run, PreprocessFollowsTheCurveWithoutNoise) {
  auto cfg = basic_config(1000);
  cfg.exec.preprocess_noise = false;
  const auto models = point_models();
  auto r = run_fixed(cfg, models, {TaskSpec::preprocess(0, 0), TaskSpec::train(0, Framework::SparkML, 0)},
                     std::make_unique<ScriptedArrivals>(std::vector<double>{0.0}), ExecutorRegistry::defaults(),
                     DataAsset{0, 10, 100000, 8000000});
  for (const auto& rec : r->trace.records)
    if (rec.op == SysOpKind::exec && rec.task_type == TaskType::preprocess) {
      const double expected = std::exp(0.018 * std::pow(1.330, std::log(1e6)) + 2.156);
      EXPECT_NEAR(rec.duration().seconds(), expected, 1e-6);
      EXPECT_NEAR(rec.duration().seconds(), 21.7, 0.1);
    }
}

TEST(Run, CompressWithoutNoiseRepeatsTheTrainingTime) {
  auto cfg = basic_config(10000);
  cfg.exec.compression_sigma = 0.0;
  const auto models = point_models(200, 10);
  auto r = run_fixed(cfg, models, full_chain(), std::make_unique<ScriptedArrivals>(std::vector<double>{0.0}));
  std::map<TaskType, SimTime> exec;
  for (const auto& rec : r->trace.records)
    if (rec.op == SysOpKind::exec) exec[rec.task_type] = rec.duration();
  EXPECT_EQ(exec[TaskType::train], SimTime::from_seconds(200));
  EXPECT_EQ(exec[TaskType::compress], SimTime::from_seconds(200));
  EXPECT_EQ(exec[TaskType::harden], SimTime::from_seconds(200));
  ASSERT_EQ(r->observed.models.size(), 3u);
  EXPECT_EQ(r->observed.models[0].first.version, 1u);
  EXPECT_EQ(r->observed.models[1].first.version, 2u);
  EXPECT_EQ(r->observed.models[2].first.version, 3u);
  EXPECT_NEAR(r->observed.models[2].first.clever_score - r->observed.models[1].first.clever_score, 0.1, 1e-12);
}

TEST(Run, GateFailureStopsThePipeline) {
  const auto models = point_models();
  auto r = run_fixed(basic_config(50000), models, full_chain(Framework::SparkML, 1.0),
                     std::make_unique<FixedArrivals>(Distribution::constant(500)));
  ASSERT_GT(r->summary.pipelines.arrived, 50u);
  EXPECT_EQ(r->summary.pipelines.gate_failed + r->summary.pipelines.truncated + r->summary.pipelines.in_queue,
            r->summary.pipelines.arrived);
  std::map<std::uint64_t, bool> failed;
  for (const auto& rec : r->trace.records) {
    if (rec.status == trace::OpStatus::gate_failed) {
      EXPECT_EQ(rec.task_type, TaskType::evaluate);
      EXPECT_EQ(rec.op, SysOpKind::rel);
      failed[rec.pipeline_id] = true;
    }
    if (rec.task_type == TaskType::compress || rec.task_type == TaskType::harden || rec.task_type == TaskType::deploy)
      ADD_FAILURE() << "pipeline " << rec.pipeline_id << " kept going after its gate";
  }
  EXPECT_GT(failed.size(), 50u);
}

TEST(Run, MissingExecutorIsReported) {
  const auto models = point_models();
  auto reg = ExecutorRegistry::defaults();
  reg.erase(TaskType::harden);
  EXPECT_THROW(run_fixed(basic_config(1000), models, full_chain(), std::make_unique<ScriptedArrivals>(std::vector<double>{0.0}), reg),
               ExecutorMissing);
}

TEST(Run, MissingModelIsReported) {
  EngineModels models = point_models();
  models.train[1].reset();
  EXPECT_THROW(run_fixed(basic_config(1000), models, full_chain(Framework::TensorFlow),
                         std::make_unique<ScriptedArrivals>(std::vector<double>{0.0})),
               ModelMissing);
}

TEST(Run, UnknownResourceFailsClosed) {
  auto cfg = basic_config(10);
  cfg.task_resource[1] = "gpu";
  const auto models = point_models();
  EXPECT_THROW(run_fixed(cfg, models, full_chain(), std::make_unique<ScriptedArrivals>(std::vector<double>{0.0})),
               ConfigInvalid);
}

// ---------------------------------------------------------------- queueing

TEST(Queueing, FifoOracleWaits) {
  auto cfg = basic_config(100);
  cfg.resources[1].capacity = 1;
  auto reg = ExecutorRegistry::defaults();
  reg.set(TaskType::train, fixed_exec(1, 5));
  const auto models = point_models();
  auto r = run_fixed(cfg, models, {TaskSpec::train(0, Framework::SparkML, 0)},
                     std::make_unique<ScriptedArrivals>(std::vector<double>{0, 1, 2}), reg);
  std::vector<double> waits;
  for (const auto& rec : r->trace.records)
    if (rec.op == SysOpKind::req) waits.push_back(rec.duration().seconds());
  EXPECT_EQ(waits, (std::vector<double>{0, 4, 8}));
  EXPECT_DOUBLE_EQ(r->summary.wait.mean, 4.0);
}

TEST(Queueing, TruncationAtTheHorizon) {
  auto cfg = basic_config(7);
  cfg.resources[1].capacity = 1;
  auto reg = ExecutorRegistry::defaults();
  reg.set(TaskType::train, fixed_exec(1, 5));
  const auto models = point_models();
  auto r = run_fixed(cfg, models, {TaskSpec::train(0, Framework::SparkML, 0)},
                     std::make_unique<ScriptedArrivals>(std::vector<double>{0, 1, 2}), reg);
  const auto& c = r->summary.pipelines;
  EXPECT_EQ(c.arrived, 3u);
  EXPECT_EQ(c.completed, 1u);
  EXPECT_EQ(c.truncated, 1u);
  EXPECT_EQ(c.in_queue, 1u);
  int truncated = 0;
  for (const auto& rec : r->trace.records)
    if (rec.status == trace::OpStatus::truncated) {
      ++truncated;
      EXPECT_EQ(rec.t_end, SimTime::from_seconds(7));
    }
  EXPECT_EQ(truncated, 2);
  EXPECT_DOUBLE_EQ(r->summary.resource("training")->utilization, 1.0);
}

TEST(Queueing, NoWaitsUnderSlack) {
  auto cfg = basic_config(20000);
  cfg.resources[0].capacity = 1000;
  cfg.resources[1].capacity = 1000;
  const auto models = point_models(300, 20);
  auto r = run_fixed(cfg, models, full_chain(), std::make_unique<FixedArrivals>(Distribution::exponential(0.1)));
  ASSERT_GT(r->summary.wait.count, 1000u);
  EXPECT_EQ(r->summary.wait.max, 0.0);
}

TEST(Queueing, InvariantsHoldUnderContention) {
  auto cfg = basic_config(200000, 5);
  cfg.resources[0].capacity = 2;
  cfg.resources[1].capacity = 3;
  EngineModels models = point_models();
  GmmModel g;
  g.weights = {0.6, 0.4};
  g.means = {Eigen::VectorXd::Constant(1, std::log(60.0)), Eigen::VectorXd::Constant(1, std::log(400.0))};
  g.covariances = {Eigen::MatrixXd::Constant(1, 1, 0.4), Eigen::MatrixXd::Constant(1, 1, 0.3)};
  for (auto& t : models.train) t = GmmSampler{g};
  auto out = std::make_unique<RunOut>();
  synth::SynthConfig sc;
  sc.p_compress = 0.3;
  sc.p_harden = 0.2;
  GmmModel assets;
  assets.weights = {1.0};
  assets.means = {Eigen::Vector3d{8.0, 2.5, 13.0}};
  Eigen::Matrix3d cov;
  cov << 1.0, 0.2, 1.1, 0.2, 0.4, 0.5, 1.1, 0.5, 1.8;
  assets.covariances = {cov};
  models.assets = GmmSampler{assets};
  Simulation sim{cfg, models, sc, ExecutorRegistry::defaults(), std::make_unique<FixedArrivals>(Distribution::exponential(1.0 / 150)),
                 std::make_unique<SynthPipelineSource>(sc, &*models.assets)};
  trace::InvariantChecker checker;
  trace::TeeSink tee{std::vector<trace::TraceSink*>{&out->trace, &checker}};
  out->summary = sim.run(tee, &out->observed);

  EXPECT_GT(out->summary.wait.max, 0.0);
  EXPECT_EQ(checker.capacity_violations(), 0u);
  EXPECT_EQ(checker.fifo_violations(), 0u);
  const auto& c = out->summary.pipelines;
  EXPECT_EQ(c.arrived, c.completed + c.gate_failed + c.truncated + c.in_queue);
  EXPECT_EQ(c.arrived, out->observed.pipelines.size());
  for (const auto& u : out->summary.resources) EXPECT_LE(u.utilization, 1.0);

  // Additivity: ops sum to tasks, tasks sum to the pipeline, exactly.
  std::map<std::pair<std::uint64_t, std::uint32_t>, SimTime> from_trace;
  for (const auto& r : out->trace.records) from_trace[std::make_pair(r.pipeline_id, r.task_id)] += r.duration();
  for (const auto& p : out->observed.pipelines) {
    SimTime sum{};
    for (const auto& t : p.tasks) {
      EXPECT_EQ(t.duration(), from_trace[std::make_pair(p.id, t.task_id)]);
      sum += t.duration();
    }
    EXPECT_EQ(sum, p.total_duration);
    EXPECT_EQ(p.total_duration, p.end - p.arrival);
  }
  for (const char* name : {"compute", "training"})
    EXPECT_NEAR(out->summary.resource(name)->busy_slot_seconds, sim.busy_slot_seconds(name), 1e-6) << name;
}

TEST(Queueing, LittlesLawOnAnMMcQueue) {
  const double lambda = 1.0, mu = 0.3;
  const std::uint32_t c = 4; // rho = lambda / (c mu) = 0.83
  auto cfg = basic_config(1.0e5, 9);
  cfg.resources[1].capacity = c;
  auto reg = ExecutorRegistry::defaults();
  reg.set(TaskType::train, [mu](const TaskSpec&, PipelineState&, ExecutionContext& ctx) {
    TaskPlan p;
    const double s = std::exponential_distribution<double>{mu}(ctx.rng->durations);
    p.ops = {{SysOpKind::req, 1, {}, {}}, {SysOpKind::exec, 1, SimTime::from_seconds(s), {}}, {SysOpKind::rel, 1, {}, {}}};
    return p;
  });
  const auto models = point_models();
  auto r = run_fixed(cfg, models, {TaskSpec::train(0, Framework::SparkML, 0)},
                     std::make_unique<FixedArrivals>(Distribution::exponential(lambda)), reg);
  const auto& u = *r->summary.resource("training");
  const double lam = static_cast<double>(r->summary.pipelines.arrived) / r->summary.horizon_s;
  EXPECT_GT(r->summary.pipelines.arrived, 95000u);
  const double L = u.mean_queue_length;
  const double W = u.wait.mean;
  EXPECT_NEAR(L / (lam * W), 1.0, 0.10) << "L=" << L << " lambda*W=" << lam * W;
}

TEST(Plans, ValidationRejectsMalformedSequences) {
  auto plan = [](std::vector<PlannedOp> ops) {
    TaskPlan p;
    p.ops = std::move(ops);
    return p;
  };
  const SimTime one = SimTime::from_seconds(1);
  EXPECT_NO_THROW(validate_plan(plan({{SysOpKind::req, 0, {}, {}}, {SysOpKind::exec, 0, one, {}}, {SysOpKind::rel, 0, {}, {}}}),
                                TaskType::train, 2));
  EXPECT_THROW(validate_plan(plan({{SysOpKind::exec, 0, one, {}}}), TaskType::train, 2), InvalidArgument);
  EXPECT_THROW(validate_plan(plan({{SysOpKind::req, 0, {}, {}}, {SysOpKind::exec, 0, one, {}}}), TaskType::train, 2),
               InvalidArgument);
  EXPECT_THROW(validate_plan(plan({{SysOpKind::req, 0, {}, {}}, {SysOpKind::rel, 0, {}, {}}, {SysOpKind::read, 1, one, 5},
                                   {SysOpKind::write, 1, one, 5}}),
                             TaskType::train, 2),
               InvalidArgument);
  EXPECT_THROW(validate_plan(plan({{SysOpKind::req, 0, {}, {}}, {SysOpKind::exec, 1, one, {}}, {SysOpKind::rel, 0, {}, {}}}),
                             TaskType::train, 2),
               InvalidArgument);
}
