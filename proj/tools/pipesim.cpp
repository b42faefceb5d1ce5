#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pipesim/cli.hpp"

using namespace pipesim;

int main(int argc, char** argv) {
  CLI::App app{"pipesim: trace-driven simulator for AI ops pipelines"};
  app.require_subcommand(1);

  cli::FitOptions fit;
  std::string fit_kind;
  auto* fit_cmd = app.add_subcommand("fit", "Fit models from an empirical CSV and write a model file");
  fit_cmd->add_option("input", fit.input, "CSV with a header row")->required();
  fit_cmd->add_option("--kind", fit_kind, "assets | arrivals | durations | curve")->required();
  fit_cmd->add_option("-o,--out", fit.out, "Model file to write")->required();
  fit_cmd->add_option("--name", fit.name, "Model name (default: conventional name for the kind)");
  fit_cmd->add_option("-k,--components", fit.components, "Mixture components");
  fit_cmd->add_option("--seed", fit.seed, "k-means initialization seed");
  fit_cmd->add_option("--tz-offset", fit.tz_offset_s, "Local-time offset of the timestamps, seconds");
  fit_cmd->add_flag("--merge", fit.merge, "Add to an existing model file");

  cli::RunOptions run;
  std::uint64_t run_seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("config", run.config, "Experiment config (INI)")->required();
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Override the config seed");
  run_cmd->add_option("--replications", run.replications, "Independent replications with derived seeds");
  run_cmd->add_option("--parallel", run.parallel, "Replications run at once");
  run_cmd->add_option("--bucket", run.bucket_s, "utilization.csv bucket width, seconds");
  run_cmd->add_flag("-q,--quiet", run.quiet, "No progress lines on stderr");

  cli::ReportOptions report;
  std::string out_dir, config, models;
  auto* rep_cmd = app.add_subcommand("report", "Analyse a trace file");
  rep_cmd->add_option("trace", report.trace, "NDJSON trace")->required();
  rep_cmd->add_option("--out", out_dir, "Output directory (default: the trace's directory)");
  rep_cmd->add_flag("--summary", report.summary, "Plain-text run summary");
  rep_cmd->add_flag("--utilization", report.utilization, "utilization.csv per resource and bucket");
  rep_cmd->add_option("--bucket", report.bucket_s, "Utilization bucket width, seconds");
  rep_cmd->add_flag("--arrivals-heatmap", report.heatmap, "arrivals_heatmap.csv by weekday and hour");
  rep_cmd->add_option("--qq", report.qq, "Metric for a Q-Q export, e.g. train_duration (repeatable)");
  rep_cmd->add_option("--against", report.against, "'model' or a second trace");
  rep_cmd->add_option("--config", config, "Experiment config supplying the models for --against model");
  rep_cmd->add_option("--models", models, "Model file for --against model");
  rep_cmd->add_option("--quantiles", report.quantiles, "Quantiles per Q-Q export");
  rep_cmd->add_option("--seed", report.seed, "Seed for model reference draws");

  std::string defaults_out = "default.models";
  auto* def_cmd = app.add_subcommand("defaults", "Write the built-in synthetic model set");
  def_cmd->add_option("-o,--out", defaults_out, "Model file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kInputError;
  }

  if (*fit_cmd) {
    const auto kind = cli::parse_fit_kind(fit_kind);
    if (!kind) {
      std::cerr << "error: unknown fit kind '" << fit_kind << "'\n";
      return cli::kInputError;
    }
    fit.kind = *kind;
    return cli::cmd_fit(fit, std::cout, std::cerr);
  }
  if (*run_cmd) {
    if (seed_opt->count()) run.seed = run_seed;
    return cli::cmd_run(run, std::cout, std::cerr);
  }
  if (*rep_cmd) {
    if (!out_dir.empty()) report.out_dir = out_dir;
    if (!config.empty()) report.config = config;
    if (!models.empty()) report.models = models;
    return cli::cmd_report(report, std::cout, std::cerr);
  }
  return cli::cmd_defaults(defaults_out, std::cout, std::cerr);
}
