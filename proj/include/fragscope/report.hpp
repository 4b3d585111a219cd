#pragma once

// Command dispatch and report emission for the fragscope CLI. Each command
// writes report.json plus one CSV table into the output directory; files are
// written via temp-then-rename and depend only on (config, seed).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fragscope/bridge_planner.hpp"
#include "fragscope/embedding_metrics.hpp"
#include "fragscope/errors.hpp"
#include "fragscope/factor_model.hpp"
#include "fragscope/shortcut_sim.hpp"
#include "json.hpp"

namespace fragscope::report {

using nlohmann::json;
namespace fs = std::filesystem;

enum class Command { kMetrics, kMi, kProps, kSimulate, kPlan };

struct RunConfig {
  Command command = Command::kMetrics;
  fs::path out_dir = ".";
  unsigned threads = 0;  // 0 = FRAGSCOPE_THREADS or hardware default
  std::uint64_t seed = 0;

  // metrics
  fs::path embeddings;
  fs::path partition;  // empty: one group holding every row
  std::vector<double> temperatures = embedding::kDefaultTemperatures;
  embedding::EstimatorConfig estimator;
  bool export_distances = false;

  // mi, plan
  fs::path mixture;

  // props
  std::size_t trials = 100;
  std::size_t max_support = 8;

  // simulate
  fs::path sim_config;  // optional JSON overrides of SimConfig
  std::string knob = "viewpoint_radius";
  std::vector<double> values;  // empty: default grid for the knob
  double lambda = sim::kDefaultLambda;
  double delta = sim::kDefaultDelta;

  // plan
  factor::Factor factor = factor::Factor::kV;
  double target = 0.5;
  std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  /// Empty: the mixture document's "bridge" symbols, else {"bridge"}.
  std::vector<std::string> bridge_symbols;
};

/// Process exit status for an error kind; 0 is success, 1 an unexpected failure.
int exit_code(ErrorKind kind);

/// Dispatches the command. Returns the exit status and writes a one-line
/// diagnostic to `diag` on failure.
int run(const RunConfig& cfg, std::ostream& diag);

// Report builders, exposed for tests and bindings.
json metrics_json(const embedding::MetricReport& r);
std::string metrics_csv(const embedding::MetricReport& r);

json mixture_summary_json(const factor::MixtureModel& mix);
std::string joint_csv(const factor::JointDistribution& j);

json verification_json(const factor::VerificationReport& disjoint,
                       const factor::VerificationReport& overlapping);
std::string verification_csv(const factor::VerificationReport& disjoint,
                             const factor::VerificationReport& overlapping);

json sim_config_to_json(const sim::SimConfig& cfg);
sim::SimConfig sim_config_from_json(const json& j, sim::SimConfig base = {});
json sweep_json(const sim::SimConfig& base, sim::Knob knob, double lambda, double delta,
                const std::vector<sim::SweepRow>& rows);
std::string sweep_csv(const std::vector<sim::SweepRow>& rows);

json plan_json(const bridge::BridgePlan& plan, const bridge::BridgeSpec& spec_template);
std::string plan_csv(const bridge::BridgePlan& plan);

/// JSON text as written to report files (two-space indent, trailing newline).
std::string dump(const json& j);

}  // namespace fragscope::report
