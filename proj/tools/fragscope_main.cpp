#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fragscope/report.hpp"

namespace {

using fragscope::report::Command;
using fragscope::report::RunConfig;

constexpr int kUsageExit = 2;

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"fragscope: fragmentation and shortcut analysis for multi-source datasets"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "fragscope 0.1.0");
  app.add_option("--threads", cfg.threads, "Worker threads (overrides FRAGSCOPE_THREADS; 0 = default)")
      ->check(CLI::NonNegativeNumber);

  auto add_common = [&cfg](CLI::App* sub) {
    sub->add_option("--out", cfg.out_dir, "Output directory")->required();
    sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::NonNegativeNumber);
  };

  std::string estimator = "exact";
  std::string aggregation = "mean";
  auto* metrics = app.add_subcommand("metrics", "Diversity, disparity and fragmentation ratio of embeddings");
  metrics->add_option("--embeddings", cfg.embeddings, "EMBF or CSV embedding file")->required();
  metrics->add_option("--partition", cfg.partition, "CSV with columns index,subdataset");
  metrics->add_option("--temps", cfg.temperatures, "Comma-separated temperatures")->delimiter(',');
  metrics->add_option("--estimator", estimator, "exact or subsample")
      ->check(CLI::IsMember({"exact", "subsample"}));
  metrics->add_option("--budget", cfg.estimator.pair_budget, "Pair budget per group or group pair");
  metrics->add_option("--aggregation", aggregation, "mean or geometric")
      ->check(CLI::IsMember({"mean", "geometric"}));
  metrics->add_option("--seed", cfg.seed, "Random seed");
  metrics->add_flag("--export-distances", cfg.export_distances, "Also write distances.csv");
  add_common(metrics);

  auto* mi = app.add_subcommand("mi", "Entropies, NMI and interleaving statistics of a factor mixture");
  mi->add_option("--mixture", cfg.mixture, "Mixture JSON document")->required();
  add_common(mi);

  auto* props = app.add_subcommand("props", "Randomized check of the NMI equality and upper bound");
  props->add_option("--trials", cfg.trials, "Trials per support mode")->check(CLI::PositiveNumber);
  props->add_option("--seed", cfg.seed, "Random seed");
  props->add_option("--max-support", cfg.max_support, "Largest factor support size")->check(CLI::PositiveNumber);
  add_common(props);

  auto* simulate = app.add_subcommand("simulate", "Shortcut simulator parameter sweep");
  simulate->add_option("--knob", cfg.knob, "Swept parameter");
  simulate->add_option("--values", cfg.values, "Comma-separated knob values")->delimiter(',');
  simulate->add_option("--lambda", cfg.lambda, "Ridge penalty");
  simulate->add_option("--delta", cfg.delta, "Success tolerance");
  simulate->add_option("--seed", cfg.seed, "Random seed");
  simulate->add_option("--config", cfg.sim_config, "JSON overrides of the base simulator config");
  add_common(simulate);

  std::string factor = "v";
  auto* plan = app.add_subcommand("plan", "Smallest bridge weight reaching a target NMI");
  plan->add_option("--mixture", cfg.mixture, "Mixture JSON document")->required();
  plan->add_option("--factor", factor, "Bridged factor")->check(CLI::IsMember({"u", "v"}));
  plan->add_option("--target", cfg.target, "Target NMI");
  plan->add_option("--grid", cfg.grid, "Comma-separated ascending epsilon grid")->delimiter(',');
  plan->add_option("--symbols", cfg.bridge_symbols, "Bridge symbols")->delimiter(',');
  add_common(plan);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageExit;
  }

  cfg.estimator.mode = estimator == "exact" ? fragscope::embedding::EstimatorMode::kExact
                                            : fragscope::embedding::EstimatorMode::kSubsample;
  cfg.estimator.aggregation = aggregation == "mean" ? fragscope::embedding::Aggregation::kMean
                                                    : fragscope::embedding::Aggregation::kGeometric;
  cfg.factor = fragscope::factor::parse_factor(factor);
  if (*metrics) cfg.command = Command::kMetrics;
  if (*mi) cfg.command = Command::kMi;
  if (*props) cfg.command = Command::kProps;
  if (*simulate) cfg.command = Command::kSimulate;
  if (*plan) cfg.command = Command::kPlan;
  return fragscope::report::run(cfg, std::cerr);
}
