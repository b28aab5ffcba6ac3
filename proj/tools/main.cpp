#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace quorum::cli;

  CLI::App app{
      "quorum: quantify ensemble certainty of categorical classifiers by "
      "voting over paraphrase variants and scoring new predictions against "
      "calibrated correct/incorrect certainty distributions"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand(
      "run", "Run paraphrase ensembles over a dataset and persist the results");
  run->add_option("dataset", run_args.dataset_path, "variant-set JSONL file")
      ->required();
  run->add_option("--config,--backend", run_args.backend_config_path,
                  "backend config JSON")
      ->required();
  run->add_option("--out,-o", run_args.out_path, "output run JSONL file")
      ->required();
  run->add_option("--parallelism", run_args.parallelism,
                  "max concurrent classifications")
      ->check(CLI::PositiveNumber);
  std::uint64_t run_seed = 0;
  auto* run_seed_opt =
      run->add_option("--seed", run_seed, "override the backend config seed");
  run->add_option("--timestamp", run_args.timestamp,
                  "record timestamp: 'now' or a literal value (default: none, "
                  "keeping output files byte-deterministic)");

  CalibrateArgs calibrate_args;
  auto* calibrate = app.add_subcommand(
      "calibrate",
      "Build correct/incorrect certainty distributions from a labeled run");
  calibrate->add_option("run", calibrate_args.run_path, "run JSONL file")
      ->required();
  calibrate->add_option("--out,-o", calibrate_args.out_path,
                        "calibration snapshot path")
      ->required();
  calibrate->add_flag("--per-class", calibrate_args.per_class,
                      "also build per-class distributions");
  calibrate->add_option("--timestamp", calibrate_args.timestamp,
                        "provenance timestamp: 'now' or a literal value");

  AssessArgs assess_args;
  auto* assess = app.add_subcommand(
      "assess", "Score prediction certainties against a calibration snapshot");
  assess->add_option("calibration", assess_args.calibration_path,
                     "calibration snapshot path")
      ->required();
  double u_new = 0.0;
  auto* u_opt = assess->add_option("--u", u_new,
                                   "a single ensemble certainty in [0,1]");
  assess->add_option("--run", assess_args.run_path,
                     "batch mode: assess every record in this run file");
  std::string class_hint;
  auto* hint_opt = assess->add_option(
      "--class-hint", class_hint,
      "use per-class distributions for this class when available");

  ReportArgs report_args;
  auto* report = app.add_subcommand(
      "report", "Emit per-question vote histogram and reasoning-length CSVs");
  report->add_option("run", report_args.run_path, "run JSONL file")->required();
  report->add_option("--out-dir", report_args.out_dir, "output directory")
      ->required();

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand(
      "simulate",
      "Run hypothesis sweeps or synthesize calibration corpora from a "
      "simulator config");
  simulate->add_option("--config", simulate_args.config_path,
                       "simulator config JSON")
      ->required();
  simulate->add_option("--thetas", simulate_args.thetas,
                       "sweep grid of conceptual-certainty values in [0,1]")
      ->delimiter(',');
  simulate->add_option("--make-corpus", simulate_args.corpus_prefix,
                       "write <prefix>.variants.jsonl and <prefix>.backend.json");
  simulate->add_option("--out,-o", simulate_args.out_path,
                       "also write the sweep CSV here");
  std::uint64_t simulate_seed = 0;
  auto* simulate_seed_opt = simulate->add_option(
      "--seed", simulate_seed, "override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (run->parsed()) {
    if (run_seed_opt->count() > 0) run_args.seed = run_seed;
    return cmd_run(run_args, std::cout, std::cerr);
  }
  if (calibrate->parsed()) {
    return cmd_calibrate(calibrate_args, std::cout, std::cerr);
  }
  if (assess->parsed()) {
    if (u_opt->count() > 0) assess_args.u_new = u_new;
    if (hint_opt->count() > 0) assess_args.class_hint = class_hint;
    return cmd_assess(assess_args, std::cout, std::cerr);
  }
  if (report->parsed()) {
    return cmd_report(report_args, std::cout, std::cerr);
  }
  if (simulate->parsed()) {
    if (simulate_seed_opt->count() > 0) simulate_args.seed = simulate_seed;
    return cmd_simulate(simulate_args, std::cout, std::cerr);
  }
  return kExitUsage;
}
