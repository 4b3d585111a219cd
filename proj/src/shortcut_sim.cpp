#include "fragscope/shortcut_sim.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fragscope/errors.hpp"
#include "fragscope/parallel.hpp"
#include "fragscope/rng.hpp"

namespace fragscope::sim {
namespace {

constexpr std::uint64_t kTrainTag = 0x51;
constexpr std::uint64_t kEvalTag = 0x52;

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& w, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), w.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = w.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

Eigen::MatrixXd take_cols(const Eigen::MatrixXd& x, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

void add_noise(Eigen::RowVectorXd& x, const FeatureLayout& layout, double sd, Rng& rng) {
  if (sd <= 0.0) return;
  for (std::size_t c = 0; c < layout.scene_cols; ++c) x(static_cast<Eigen::Index>(layout.scene_begin + c)) += sd * rng.normal();
  for (std::size_t c = 0; c < layout.view_cols; ++c) x(static_cast<Eigen::Index>(layout.view_begin + c)) += sd * rng.normal();
}

void check_columns(const std::vector<std::size_t>& cols, Eigen::Index width) {
  for (auto c : cols) {
    if (static_cast<Eigen::Index>(c) >= width) throw ValidationError("feature column out of range");
  }
}

template <typename Pairing>
EvalResult evaluate(const LinearPolicy& policy, const SimConfig& cfg, double delta,
                    Pairing&& pairs) {
  if (!(delta > 0.0)) throw ValidationError("success tolerance delta must be > 0");
  validate(cfg);
  const auto layout = feature_layout(cfg);
  if (policy.weights.rows() != static_cast<Eigen::Index>(layout.total)) {
    throw ValidationError("policy was fitted on a dataset with a different feature layout");
  }
  EvalResult r;
  r.success_tolerance = delta;
  double success = 0.0;
  double shortcut = 0.0;
  for (const auto& [scene, view] : pairs) {
    for (std::size_t s = 0; s < cfg.positions_per_subdataset; ++s) {
      const Eigen::Vector2d instructed = task_position(cfg, scene, s);
      const Eigen::Vector2d cue = task_position(cfg, view, s);
      Rng rng(derive_seed(cfg.seed, kEvalTag, scene * cfg.m + view, s));
      for (std::size_t t = 0; t < cfg.eval_trials_per_task; ++t) {
        Eigen::RowVectorXd x = encode_observation(cfg, scene, s, cfg.viewpoint_centers[view]);
        add_noise(x, layout, cfg.noise_std, rng);
        const Eigen::Vector2d pred = policy.predict(x);
        if ((pred - instructed).norm() <= delta) success += 1.0;
        shortcut += shortcut_score(pred, instructed, cue, delta);
        ++r.trials;
      }
    }
  }
  r.ood_success = success / static_cast<double>(r.trials);
  r.shortcut_degree = shortcut / static_cast<double>(r.trials);
  return r;
}

}  // namespace

std::string_view to_string(Layout l) { return l == Layout::kSeparated ? "separated" : "intertwined"; }

Layout parse_layout(std::string_view s) {
  if (s == "separated") return Layout::kSeparated;
  if (s == "intertwined") return Layout::kIntertwined;
  throw ConfigurationError("layout must be 'intertwined' or 'separated'");
}

void validate(const SimConfig& cfg) {
  if (cfg.m < 1) throw ConfigurationError("m must be >= 1");
  if (cfg.positions_per_subdataset < 1 || cfg.positions_per_subdataset > 5) {
    throw ConfigurationError("positions_per_subdataset must be in [1, 5]");
  }
  if (cfg.viewpoint_centers.size() != cfg.m) {
    throw ConfigurationError("need one viewpoint center per sub-dataset");
  }
  if (!(cfg.viewpoint_radius >= 0.0)) throw ConfigurationError("viewpoint_radius must be >= 0");
  if (!(cfg.noise_std >= 0.0)) throw ConfigurationError("noise_std must be >= 0");
  if (!(cfg.viewpoint_gain > 0.0)) throw ConfigurationError("viewpoint_gain must be > 0");
  if (cfg.episodes_per_task < 1 || cfg.eval_trials_per_task < 1) {
    throw ConfigurationError("episode and trial counts must be >= 1");
  }
  for (double c : cfg.viewpoint_centers) {
    if (c - cfg.viewpoint_radius < kMinViewpoint || c + cfg.viewpoint_radius > kMaxViewpoint) {
      throw ConfigurationError("viewpoint range " + std::to_string(c) + " +/- " +
                               std::to_string(cfg.viewpoint_radius) +
                               " leaves [-10, 90] degrees");
    }
  }
  if (cfg.per_task_viewpoints && cfg.positions_per_subdataset > 1 && cfg.viewpoint_radius <= 0.0) {
    throw ConfigurationError("per_task_viewpoints needs viewpoint_radius > 0 to spread tasks");
  }
}

std::vector<std::size_t> FeatureLayout::u_columns() const {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < scene_cols; ++c) cols.push_back(scene_begin + c);
  for (std::size_t c = 0; c < instr_cols; ++c) cols.push_back(instr_begin + c);
  return cols;
}

std::vector<std::size_t> FeatureLayout::v_columns() const {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < view_cols; ++c) cols.push_back(view_begin + c);
  return cols;
}

FeatureLayout feature_layout(const SimConfig& cfg) {
  FeatureLayout l;
  l.scene_begin = 0;
  l.scene_cols = 2 * cfg.positions_per_subdataset;
  l.view_begin = l.scene_cols;
  l.view_cols = 2;
  l.instr_begin = l.view_begin + l.view_cols;
  l.instr_cols = cfg.include_instruction ? cfg.m * cfg.positions_per_subdataset : 0;
  l.total = l.instr_begin + l.instr_cols;
  return l;
}

Eigen::Vector2d task_position(const SimConfig& cfg, std::size_t sub, std::size_t slot) {
  const std::size_t k = cfg.positions_per_subdataset;
  if (cfg.layout == Layout::kSeparated) {
    // Sub-datasets occupy horizontal bands; slots spread along x.
    const double x = k > 1 ? -0.8 + 1.6 * static_cast<double>(slot) / static_cast<double>(k - 1) : 0.0;
    const double y = cfg.m > 1 ? -0.5 + static_cast<double>(sub) / static_cast<double>(cfg.m - 1) : 0.0;
    return {x, y};
  }
  // Intertwined: one shared line, sub-datasets alternate slot by slot.
  const std::size_t total = cfg.m * k;
  const std::size_t g = slot * cfg.m + sub;
  const double x = total > 1 ? -0.8 + 1.6 * static_cast<double>(g) / static_cast<double>(total - 1) : 0.0;
  return {x, 0.0};
}

double training_viewpoint(const SimConfig& cfg, std::size_t sub, std::size_t slot,
                          std::size_t episode, double unit_draw) {
  const std::size_t range = cfg.augment_viewpoints ? episode % cfg.m : sub;
  const double center = cfg.viewpoint_centers[range];
  const double r = cfg.viewpoint_radius;
  if (cfg.per_task_viewpoints) {
    const std::size_t k = cfg.positions_per_subdataset;
    if (k == 1) return center;
    return center + r * (2.0 * static_cast<double>(slot) / static_cast<double>(k - 1) - 1.0);
  }
  return center + r * (2.0 * unit_draw - 1.0);
}

Eigen::RowVectorXd encode_observation(const SimConfig& cfg, std::size_t sub, std::size_t slot,
                                      double viewpoint_deg) {
  const auto l = feature_layout(cfg);
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(l.total));
  for (std::size_t s = 0; s < cfg.positions_per_subdataset; ++s) {
    const auto p = task_position(cfg, sub, s);
    x(static_cast<Eigen::Index>(l.scene_begin + 2 * s)) = p.x();
    x(static_cast<Eigen::Index>(l.scene_begin + 2 * s + 1)) = p.y();
  }
  const double a = radians(viewpoint_deg);
  x(static_cast<Eigen::Index>(l.view_begin)) = cfg.viewpoint_gain * std::sin(a);
  x(static_cast<Eigen::Index>(l.view_begin + 1)) = cfg.viewpoint_gain * std::cos(a);
  if (cfg.include_instruction) {
    x(static_cast<Eigen::Index>(l.instr_begin + sub * cfg.positions_per_subdataset + slot)) = 1.0;
  }
  return x;
}

SimDataset generate_dataset(const SimConfig& cfg) {
  validate(cfg);
  SimDataset d;
  d.layout = feature_layout(cfg);
  d.episodes_per_task = cfg.episodes_per_task;
  const std::size_t k = cfg.positions_per_subdataset;
  const std::size_t n = cfg.m * k * cfg.episodes_per_task;
  d.observations.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.layout.total));
  d.targets.resize(static_cast<Eigen::Index>(n), 2);
  d.subdataset_ids.reserve(n);
  d.task_ids.reserve(n);
  d.viewpoints.reserve(n);

  Eigen::Index row = 0;
  for (std::size_t i = 0; i < cfg.m; ++i) {
    for (std::size_t s = 0; s < k; ++s) {
      Rng rng(derive_seed(cfg.seed, kTrainTag, i, s));
      const Eigen::Vector2d target = task_position(cfg, i, s);
      for (std::size_t e = 0; e < cfg.episodes_per_task; ++e, ++row) {
        const double theta = training_viewpoint(cfg, i, s, e, rng.uniform());
        Eigen::RowVectorXd x = encode_observation(cfg, i, s, theta);
        add_noise(x, d.layout, cfg.noise_std, rng);
        d.observations.row(row) = x;
        d.targets.row(row) = target.transpose();
        d.subdataset_ids.push_back(i);
        d.task_ids.push_back(s);
        d.viewpoints.push_back(theta);
      }
    }
  }
  return d;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd LinearPolicy::weights_u() const { return take_rows(weights, u_columns); }
Eigen::MatrixXd LinearPolicy::weights_v() const { return take_rows(weights, v_columns); }

double LinearPolicy::weight_ratio() const {
  const double nu = weights_u().norm();
  const double nv = weights_v().norm();
  if (nu == 0.0) return nv == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return nv / nu;
}

Eigen::Vector2d LinearPolicy::predict(const Eigen::RowVectorXd& x) const {
  return (x * weights).transpose() + bias;
}

LinearPolicy fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                       std::vector<std::size_t> u_columns, std::vector<std::size_t> v_columns,
                       double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("ridge strength lambda must be > 0");
  if (features.rows() == 0 || features.cols() == 0) throw ValidationError("empty design matrix");
  if (features.rows() != targets.rows()) throw ValidationError("feature/target row mismatch");
  check_columns(u_columns, features.cols());
  check_columns(v_columns, features.cols());

  const double n = static_cast<double>(features.rows());
  const Eigen::RowVectorXd x_mean = features.colwise().mean();
  const Eigen::RowVectorXd y_mean = targets.colwise().mean();
  const Eigen::MatrixXd xc = features.rowwise() - x_mean;
  const Eigen::MatrixXd yc = targets.rowwise() - y_mean;

  Eigen::MatrixXd gram = (xc.transpose() * xc) / n;
  gram.diagonal().array() += lambda;
  const Eigen::MatrixXd rhs = (xc.transpose() * yc) / n;

  LinearPolicy p;
  p.weights = gram.ldlt().solve(rhs);
  p.bias = (y_mean - x_mean * p.weights).transpose();
  p.lambda = lambda;
  p.u_columns = std::move(u_columns);
  p.v_columns = std::move(v_columns);
  p.normal_equation_residual = (gram * p.weights - rhs).cwiseAbs().maxCoeff();
  return p;
}

LinearPolicy fit_ridge(const SimDataset& data, double lambda) {
  return fit_ridge(data.observations, data.targets, data.layout.u_columns(),
                   data.layout.v_columns(), lambda);
}

double shortcut_score(const Eigen::Vector2d& prediction, const Eigen::Vector2d& instructed,
                      const Eigen::Vector2d& shortcut, double delta) {
  if ((instructed - shortcut).norm() <= delta) return 0.0;
  const double to_shortcut = (prediction - shortcut).norm();
  if (to_shortcut <= delta) return 1.0;
  const Eigen::Vector2d mid = 0.5 * (instructed + shortcut);
  const double to_mid = (prediction - mid).norm();
  if (to_mid < to_shortcut && to_mid < (prediction - instructed).norm()) return 0.5;
  return 0.0;
}

EvalResult evaluate_ood(const LinearPolicy& policy, const SimConfig& cfg, double delta) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < cfg.m; ++i) {
    for (std::size_t j = 0; j < cfg.m; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) throw ValidationError("OOD evaluation needs at least two sub-datasets");
  return evaluate(policy, cfg, delta, pairs);
}

EvalResult evaluate_in_distribution(const LinearPolicy& policy, const SimConfig& cfg,
                                    double delta) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < cfg.m; ++i) pairs.emplace_back(i, i);
  return evaluate(policy, cfg, delta, pairs);
}

GradientPair initial_gradients(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                               const std::vector<std::size_t>& u_columns,
                               const std::vector<std::size_t>& v_columns) {
  if (features.rows() == 0) throw ValidationError("empty design matrix");
  if (features.rows() != targets.rows()) throw ValidationError("feature/target row mismatch");
  check_columns(u_columns, features.cols());
  check_columns(v_columns, features.cols());
  const double n = static_cast<double>(features.rows());
  const Eigen::MatrixXd yc = targets.rowwise() - targets.colwise().mean();
  auto block_gradient = [&](const std::vector<std::size_t>& cols) {
    const Eigen::MatrixXd x = take_cols(features, cols);
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    return Eigen::MatrixXd(-2.0 * (xc.transpose() * yc) / n);
  };
  GradientPair g;
  g.g_u = block_gradient(u_columns);
  g.g_v = block_gradient(v_columns);
  g.norm_u = g.g_u.norm();
  g.norm_v = g.g_v.norm();
  return g;
}

GradientPair initial_gradients(const SimDataset& data) {
  return initial_gradients(data.observations, data.targets, data.layout.u_columns(),
                           data.layout.v_columns());
}

// ---------------------------------------------------------------------------

std::string_view to_string(Knob k) {
  switch (k) {
    case Knob::kViewpointRadius: return "viewpoint_radius";
    case Knob::kViewpointCenterDistance: return "viewpoint_center_distance";
    case Knob::kPositionsPerSubdataset: return "positions_per_subdataset";
    case Knob::kLayout: return "layout";
    case Knob::kPerTaskViewpoints: return "per_task_viewpoints";
  }
  return "";
}

Knob parse_knob(std::string_view s) {
  for (auto k : {Knob::kViewpointRadius, Knob::kViewpointCenterDistance,
                 Knob::kPositionsPerSubdataset, Knob::kLayout, Knob::kPerTaskViewpoints}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigurationError("unknown sweep knob '" + std::string(s) + "'");
}

std::vector<double> default_grid(Knob k) {
  switch (k) {
    case Knob::kViewpointRadius: return {0, 2, 5, 10, 20};
    case Knob::kViewpointCenterDistance: return {0, 10, 20, 40, 60};
    case Knob::kPositionsPerSubdataset: return {1, 2, 3, 4, 5};
    case Knob::kLayout: return {0, 1};
    case Knob::kPerTaskViewpoints: return {0, 1};
  }
  return {};
}

SimConfig apply_knob(const SimConfig& base, Knob knob, double value) {
  SimConfig cfg = base;
  auto as_flag = [&](double v) {
    if (v != 0.0 && v != 1.0) throw ConfigurationError("knob " + std::string(to_string(knob)) + " takes 0 or 1");
    return v == 1.0;
  };
  switch (knob) {
    case Knob::kViewpointRadius:
      cfg.viewpoint_radius = value;
      break;
    case Knob::kViewpointCenterDistance: {
      if (!(value >= 0.0)) throw ConfigurationError("center distance must be >= 0");
      double mid = 0.0;
      for (double c : base.viewpoint_centers) mid += c;
      mid /= static_cast<double>(base.viewpoint_centers.size());
      const double half = (static_cast<double>(cfg.m) - 1.0) / 2.0;
      for (std::size_t i = 0; i < cfg.m; ++i) {
        cfg.viewpoint_centers[i] = mid + (static_cast<double>(i) - half) * value;
      }
      break;
    }
    case Knob::kPositionsPerSubdataset:
      if (value < 1.0 || value != std::floor(value)) {
        throw ConfigurationError("positions_per_subdataset must be a positive integer");
      }
      cfg.positions_per_subdataset = static_cast<std::size_t>(value);
      break;
    case Knob::kLayout:
      cfg.layout = as_flag(value) ? Layout::kSeparated : Layout::kIntertwined;
      break;
    case Knob::kPerTaskViewpoints:
      cfg.per_task_viewpoints = as_flag(value);
      break;
  }
  validate(cfg);
  return cfg;
}

std::vector<SweepRow> sweep(const SimConfig& base, Knob knob, const std::vector<double>& values,
                            double lambda, double delta) {
  if (values.empty()) throw ValidationError("sweep needs at least one knob value");
  std::vector<SimConfig> configs;
  configs.reserve(values.size());
  for (double v : values) configs.push_back(apply_knob(base, knob, v));

  std::vector<SweepRow> rows(values.size());
  parallel_for(values.size(), [&](std::size_t i) {
    const auto policy = fit_ridge(generate_dataset(configs[i]), lambda);
    const auto eval = evaluate_ood(policy, configs[i], delta);
    rows[i] = {values[i], eval.ood_success, eval.shortcut_degree, policy.weight_ratio(),
               configs[i].seed};
  });
  return rows;
}

}  // namespace fragscope::sim
