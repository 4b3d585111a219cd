#include "fragscope/report.hpp"

#include <ostream>

#include "fragscope/io.hpp"
#include "fragscope/parallel.hpp"

namespace fragscope::report {
namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string estimator_name(embedding::EstimatorMode m) {
  return m == embedding::EstimatorMode::kExact ? "exact" : "subsample";
}

std::string aggregation_name(embedding::Aggregation a) {
  return a == embedding::Aggregation::kMean ? "mean" : "geometric";
}

std::string csv_optional(const std::optional<double>& v) { return v ? io::format_double(*v) : ""; }

class ThreadScope {
 public:
  explicit ThreadScope(unsigned n) { set_thread_count(n); }
  ~ThreadScope() { set_thread_count(0); }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;
};

void write_outputs(const fs::path& dir, const json& report, const std::string& csv_name,
                   const std::string& csv) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  io::write_file_atomic(dir / "report.json", dump(report));
  io::write_file_atomic(dir / csv_name, csv);
}

void run_metrics(const RunConfig& cfg) {
  const auto raw = io::load_embeddings(cfg.embeddings);
  const auto e = embedding::normalize_rows(raw);
  const auto p = cfg.partition.empty() ? embedding::Partition::single(e.rows())
                                       : io::load_partition(cfg.partition, e.rows());
  auto est = cfg.estimator;
  est.seed = cfg.seed;
  const auto r = embedding::temperature_sweep(e, p, cfg.temperatures, est);
  write_outputs(cfg.out_dir, metrics_json(r), "metrics.csv", metrics_csv(r));
  if (cfg.export_distances) {
    const auto d = embedding::pairwise_sq_distances(e);
    std::string csv;
    for (std::size_t i = 0; i < e.rows(); ++i) {
      for (std::size_t j = 0; j < e.rows(); ++j) {
        if (j) csv += ',';
        csv += io::format_double(d[i * e.rows() + j]);
      }
      csv += '\n';
    }
    io::write_file_atomic(cfg.out_dir / "distances.csv", csv);
  }
}

void run_mi(const RunConfig& cfg) {
  const auto text = io::read_file(cfg.mixture);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(cfg.mixture.string() + ": " + e.what());
  }
  const auto mix = io::mixture_from_json(doc);
  json out = mixture_summary_json(mix);
  if (const auto spec = io::bridge_from_json(doc); spec && spec->epsilon > 0.0) {
    out["bridge"] = io::bridge_to_json(*spec);
    out["after_bridge"] = mixture_summary_json(bridge::apply_bridge(mix, *spec));
  }
  write_outputs(cfg.out_dir, out, "joint.csv", joint_csv(factor::joint_mixture(mix)));
}

void run_props(const RunConfig& cfg) {
  factor::VerificationConfig vc;
  vc.trials = cfg.trials;
  vc.seed = cfg.seed;
  vc.max_support = cfg.max_support;
  vc.mode = factor::SupportMode::kDisjoint;
  const auto disjoint = factor::verify_propositions(vc);
  vc.mode = factor::SupportMode::kOverlapping;
  const auto overlapping = factor::verify_propositions(vc);
  write_outputs(cfg.out_dir, verification_json(disjoint, overlapping), "trials.csv",
                verification_csv(disjoint, overlapping));
}

void run_simulate(const RunConfig& cfg) {
  sim::SimConfig base;
  if (!cfg.sim_config.empty()) {
    json doc;
    try {
      doc = json::parse(io::read_file(cfg.sim_config));
    } catch (const json::parse_error& e) {
      throw ParseError(cfg.sim_config.string() + ": " + e.what());
    }
    base = sim_config_from_json(doc);
  }
  base.seed = cfg.seed;
  const auto knob = sim::parse_knob(cfg.knob);
  const auto values = cfg.values.empty() ? sim::default_grid(knob) : cfg.values;
  const auto rows = sim::sweep(base, knob, values, cfg.lambda, cfg.delta);
  write_outputs(cfg.out_dir, sweep_json(base, knob, cfg.lambda, cfg.delta, rows), "sweep.csv",
                sweep_csv(rows));
}

void run_plan(const RunConfig& cfg) {
  json doc;
  try {
    doc = json::parse(io::read_file(cfg.mixture));
  } catch (const json::parse_error& e) {
    throw ParseError(cfg.mixture.string() + ": " + e.what());
  }
  const auto mix = io::mixture_from_json(doc);
  bridge::BridgeSpec spec;
  spec.factor = cfg.factor;
  if (!cfg.bridge_symbols.empty()) {
    spec.bridge_symbols = cfg.bridge_symbols;
  } else if (const auto from_doc = io::bridge_from_json(doc)) {
    spec.bridge_symbols = from_doc->bridge_symbols;
  } else {
    spec.bridge_symbols = {"bridge"};
  }
  const auto plan = bridge::plan_bridge(mix, spec, cfg.target, cfg.grid);
  write_outputs(cfg.out_dir, plan_json(plan, spec), "plan.csv", plan_csv(plan));
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFileNotFound: return 3;
    case ErrorKind::kParse: return 4;
    case ErrorKind::kValidation: return 5;
    case ErrorKind::kInsufficientData: return 6;
    case ErrorKind::kUnsupportedArity: return 7;
    case ErrorKind::kPrecondition: return 8;
    case ErrorKind::kConfiguration: return 9;
    case ErrorKind::kIo: return 10;
  }
  return 1;
}

int run(const RunConfig& cfg, std::ostream& diag) {
  ThreadScope threads(cfg.threads);
  try {
    switch (cfg.command) {
      case Command::kMetrics: run_metrics(cfg); break;
      case Command::kMi: run_mi(cfg); break;
      case Command::kProps: run_props(cfg); break;
      case Command::kSimulate: run_simulate(cfg); break;
      case Command::kPlan: run_plan(cfg); break;
    }
  } catch (const Error& e) {
    diag << "fragscope: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    diag << "fragscope: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json metrics_json(const embedding::MetricReport& r) {
  json disparity = json::array();
  json ratio = json::array();
  for (std::size_t k = 0; k < r.temperatures.size(); ++k) {
    disparity.push_back(optional_number(r.disparity[k]));
    ratio.push_back(optional_number(r.ratio[k]));
  }
  json estimator{{"mode", estimator_name(r.estimator.mode)},
                 {"aggregation", aggregation_name(r.estimator.aggregation)},
                 {"seed", r.estimator.seed}};
  estimator["budget"] = r.estimator.mode == embedding::EstimatorMode::kSubsample
                            ? json(r.estimator.pair_budget)
                            : json(nullptr);
  return json{{"temperatures", r.temperatures},
              {"groups", r.groups},
              {"group_sizes", r.group_sizes},
              {"diversity", r.diversity},
              {"disparity", disparity},
              {"ratio", ratio},
              {"estimator", estimator},
              {"warnings", r.warnings}};
}

std::string metrics_csv(const embedding::MetricReport& r) {
  std::string out = "temperature,group,size,diversity,disparity,ratio\n";
  for (std::size_t k = 0; k < r.temperatures.size(); ++k) {
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
      out += io::format_double(r.temperatures[k]) + "," + r.groups[g] + "," +
             std::to_string(r.group_sizes[g]) + "," + io::format_double(r.diversity[g][k]) + "," +
             csv_optional(r.disparity[k]) + "," + csv_optional(r.ratio[k]) + "\n";
    }
  }
  return out;
}

json mixture_summary_json(const factor::MixtureModel& mix) {
  const auto nmi = factor::normalized_mi(mix);
  json comps = json::array();
  for (const auto& c : mix.components()) {
    comps.push_back({{"entropy_u", factor::entropy(c.u)}, {"entropy_v", factor::entropy(c.v)}});
  }
  json out{{"m", mix.size()},
           {"components", comps},
           {"entropy_u", nmi.entropy_u},
           {"entropy_v", nmi.entropy_v},
           {"mutual_information", nmi.mutual_information},
           {"nmi", nmi.value},
           {"nmi_degenerate", nmi.degenerate},
           {"c_diversity", factor::c_diversity(mix)},
           {"supports_disjoint", factor::supports_disjoint(mix)},
           {"c_interleave", nullptr},
           {"prop1_predicted_nmi", nullptr},
           {"prop2_upper_bound", nullptr},
           {"prop2_bound_holds", nullptr}};
  if (mix.size() == 2) {
    out["c_interleave"] = factor::c_interleave(mix);
    const double bound = factor::prop2_nmi_upper_bound(mix);
    out["prop2_upper_bound"] = bound;
    out["prop2_bound_holds"] = nmi.value <= bound + 1e-10;
    if (factor::supports_disjoint(mix)) out["prop1_predicted_nmi"] = factor::prop1_predicted_nmi(mix);
  }
  return out;
}

std::string joint_csv(const factor::JointDistribution& j) {
  std::string out = "u,v,mass\n";
  for (std::size_t a = 0; a < j.u_support().size(); ++a) {
    for (std::size_t b = 0; b < j.v_support().size(); ++b) {
      out += j.u_support()[a] + "," + j.v_support()[b] + "," + io::format_double(j.at(a, b)) + "\n";
    }
  }
  return out;
}

json verification_json(const factor::VerificationReport& disjoint,
                       const factor::VerificationReport& overlapping) {
  json worst = overlapping.worst_violation ? io::mixture_to_json(*overlapping.worst_violation)
                                           : json(nullptr);
  return json{
      {"seed", disjoint.config.seed},
      {"max_support", disjoint.config.max_support},
      {"disjoint",
       {{"trials", disjoint.config.trials},
        {"max_equality_residual", disjoint.max_equality_residual},
        {"max_bound_identity_gap", disjoint.max_bound_identity_gap},
        {"prop1_holds", disjoint.max_equality_residual < 1e-10}}},
      {"overlapping",
       {{"trials", overlapping.config.trials},
        {"max_bound_violation", overlapping.max_bound_violation},
        {"bound_violations", overlapping.bound_violations},
        {"prop2_holds", overlapping.bound_violations == 0},
        {"worst_violation", worst}}}};
}

std::string verification_csv(const factor::VerificationReport& disjoint,
                             const factor::VerificationReport& overlapping) {
  std::string out = "mode,trial,nmi,prediction,residual,c_diversity,c_interleave\n";
  auto emit = [&](const factor::VerificationReport& r, const char* mode) {
    for (std::size_t t = 0; t < r.trials.size(); ++t) {
      const auto& x = r.trials[t];
      out += std::string(mode) + "," + std::to_string(t) + "," + io::format_double(x.nmi) + "," +
             io::format_double(x.prediction) + "," + io::format_double(x.residual) + "," +
             io::format_double(x.c_diversity) + "," + io::format_double(x.c_interleave) + "\n";
    }
  };
  emit(disjoint, "disjoint");
  emit(overlapping, "overlapping");
  return out;
}

json sim_config_to_json(const sim::SimConfig& c) {
  return json{{"m", c.m},
              {"positions_per_subdataset", c.positions_per_subdataset},
              {"layout", std::string(sim::to_string(c.layout))},
              {"viewpoint_centers", c.viewpoint_centers},
              {"viewpoint_radius", c.viewpoint_radius},
              {"viewpoint_gain", c.viewpoint_gain},
              {"include_instruction", c.include_instruction},
              {"per_task_viewpoints", c.per_task_viewpoints},
              {"augment_viewpoints", c.augment_viewpoints},
              {"noise_std", c.noise_std},
              {"episodes_per_task", c.episodes_per_task},
              {"eval_trials_per_task", c.eval_trials_per_task},
              {"seed", c.seed}};
}

sim::SimConfig sim_config_from_json(const json& j, sim::SimConfig c) {
  if (!j.is_object()) throw ParseError("simulation config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "m") c.m = value.get<std::size_t>();
      else if (key == "positions_per_subdataset") c.positions_per_subdataset = value.get<std::size_t>();
      else if (key == "layout") c.layout = sim::parse_layout(value.get<std::string>());
      else if (key == "viewpoint_centers") c.viewpoint_centers = value.get<std::vector<double>>();
      else if (key == "viewpoint_radius") c.viewpoint_radius = value.get<double>();
      else if (key == "viewpoint_gain") c.viewpoint_gain = value.get<double>();
      else if (key == "include_instruction") c.include_instruction = value.get<bool>();
      else if (key == "per_task_viewpoints") c.per_task_viewpoints = value.get<bool>();
      else if (key == "augment_viewpoints") c.augment_viewpoints = value.get<bool>();
      else if (key == "noise_std") c.noise_std = value.get<double>();
      else if (key == "episodes_per_task") c.episodes_per_task = value.get<std::size_t>();
      else if (key == "eval_trials_per_task") c.eval_trials_per_task = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ParseError("simulation config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("simulation config: ") + e.what());
  }
  return c;
}

json sweep_json(const sim::SimConfig& base, sim::Knob knob, double lambda, double delta,
                const std::vector<sim::SweepRow>& rows) {
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"knob_value", r.knob_value},
                     {"ood_success", r.ood_success},
                     {"shortcut_degree", r.shortcut_degree},
                     {"weight_ratio", r.weight_ratio},
                     {"seed", r.seed}});
  }
  return json{{"knob", std::string(sim::to_string(knob))},
              {"lambda", lambda},
              {"delta", delta},
              {"base_config", sim_config_to_json(base)},
              {"rows", table}};
}

std::string sweep_csv(const std::vector<sim::SweepRow>& rows) {
  std::string out = "knob_value,ood_success,shortcut_degree,weight_ratio,seed\n";
  for (const auto& r : rows) {
    out += io::format_double(r.knob_value) + "," + io::format_double(r.ood_success) + "," +
           io::format_double(r.shortcut_degree) + "," + io::format_double(r.weight_ratio) + "," +
           std::to_string(r.seed) + "\n";
  }
  return out;
}

json plan_json(const bridge::BridgePlan& plan, const bridge::BridgeSpec& spec_template) {
  json grid = json::array();
  for (const auto& g : plan.grid) {
    grid.push_back({{"epsilon", g.epsilon}, {"nmi", g.nmi}, {"bound", optional_number(g.bound)}});
  }
  return json{{"factor", std::string(factor::to_string(spec_template.factor))},
              {"bridge_symbols", spec_template.bridge_symbols},
              {"target_nmi", plan.target_nmi},
              {"baseline_nmi", plan.baseline_nmi},
              {"baseline_bound", optional_number(plan.baseline_bound)},
              {"feasible", plan.feasible()},
              {"epsilon_star", optional_number(plan.epsilon_star)},
              {"achieved_nmi", plan.achieved_nmi},
              {"bound_after", optional_number(plan.bound_after)},
              {"monotone", plan.monotone},
              {"grid", grid}};
}

std::string plan_csv(const bridge::BridgePlan& plan) {
  std::string out = "epsilon,nmi,bound\n";
  for (const auto& g : plan.grid) {
    out += io::format_double(g.epsilon) + "," + io::format_double(g.nmi) + "," + csv_optional(g.bound) + "\n";
  }
  return out;
}

}  // namespace fragscope::report
