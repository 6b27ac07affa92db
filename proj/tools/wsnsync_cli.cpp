#include <iostream>

#include <CLI11.hpp>

#include "wsnsync/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Energy-efficient WSN time synchronization experiments"};
  app.require_subcommand(1);

  wsnsync::CommandOptions opts;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", opts.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", opts.output_dir, "Output directory")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
  };

  auto* run = app.add_subcommand("run", "Run one simulation and write run_report.csv");
  auto* sweep = app.add_subcommand("sweep", "Run the sweep cross product and write cells.csv/aggregate.csv");
  auto* bench = app.add_subcommand("bench", "Monte-Carlo estimator benchmark, writes mse_vs_k.csv");
  bench->footer("Delays are Gaussian or AR(1) and are not clamped at zero.");
  for (auto* sub : {run, sweep, bench}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wsnsync::kExitConfig;
  }

  for (auto* sub : {run, sweep, bench}) {
    if (sub->count("--seed")) opts.seed = seed;
  }

  if (run->parsed()) return wsnsync::cmd_run(opts, std::cout, std::cerr);
  if (sweep->parsed()) return wsnsync::cmd_sweep(opts, std::cout, std::cerr);
  return wsnsync::cmd_bench_estimators(opts, std::cout, std::cerr);
}
