#pragma once

// Deterministic toy model of shortcut learning across sub-datasets.
//
// Each sub-dataset shows a fixed scene (its set of object positions) from a
// range of camera viewpoints, and each task asks for one object of that
// scene. A closed-form ridge learner maps observation features to the target
// position. Crossing one sub-dataset's scene and instruction with another
// sub-dataset's viewpoint exposes whether the learner keyed on the viewpoint.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fragscope::sim {

enum class Layout { kIntertwined, kSeparated };

std::string_view to_string(Layout l);
Layout parse_layout(std::string_view s);

/// Admissible camera angles in degrees.
inline constexpr double kMinViewpoint = -10.0;
inline constexpr double kMaxViewpoint = 90.0;

struct SimConfig {
  std::size_t m = 2;                         // sub-datasets
  std::size_t positions_per_subdataset = 1;  // tasks per sub-dataset, 1..5
  Layout layout = Layout::kSeparated;
  std::vector<double> viewpoint_centers{10.0, 70.0};  // degrees, one per sub-dataset
  double viewpoint_radius = 0.0;                      // degrees
  double viewpoint_gain = 10.0;  // scale of the (sin, cos) viewpoint feature
  bool include_instruction = true;
  /// Each task gets its own fixed viewpoint spread over center +/- radius.
  bool per_task_viewpoints = false;
  /// Episode e of every task is shot from sub-dataset (e mod m)'s range, so
  /// viewpoint marginals match across sub-datasets.
  bool augment_viewpoints = false;
  double noise_std = 0.0;
  std::size_t episodes_per_task = 200;
  std::size_t eval_trials_per_task = 1;
  std::uint64_t seed = 0;
};

/// Throws ConfigurationError on infeasible settings.
void validate(const SimConfig& cfg);

/// Column ranges of the observation matrix.
struct FeatureLayout {
  std::size_t scene_begin = 0, scene_cols = 0;  // 2 coordinates per object
  std::size_t view_begin = 0, view_cols = 2;    // gain * (sin, cos)
  std::size_t instr_begin = 0, instr_cols = 0;  // one-hot over all m * k tasks
  std::size_t total = 0;

  std::vector<std::size_t> u_columns() const;  // scene + instruction
  std::vector<std::size_t> v_columns() const;  // viewpoint
};

FeatureLayout feature_layout(const SimConfig& cfg);

struct SimDataset {
  Eigen::MatrixXd observations;  // rows = episodes
  Eigen::MatrixXd targets;       // rows x 2
  std::vector<std::size_t> subdataset_ids;
  std::vector<std::size_t> task_ids;  // slot within the sub-dataset
  std::vector<double> viewpoints;     // degrees
  FeatureLayout layout;
  std::size_t episodes_per_task = 0;
};

/// Object position for task `slot` of sub-dataset `sub`, in [-1, 1]^2.
Eigen::Vector2d task_position(const SimConfig& cfg, std::size_t sub, std::size_t slot);

/// Angle used for one training episode.
double training_viewpoint(const SimConfig& cfg, std::size_t sub, std::size_t slot,
                          std::size_t episode, double unit_draw);

/// Noise-free feature row for (scene of `sub`, instruction for `slot`, angle).
Eigen::RowVectorXd encode_observation(const SimConfig& cfg, std::size_t sub, std::size_t slot,
                                      double viewpoint_deg);

SimDataset generate_dataset(const SimConfig& cfg);

struct LinearPolicy {
  Eigen::MatrixXd weights;  // features x 2
  Eigen::Vector2d bias = Eigen::Vector2d::Zero();
  double lambda = 0.0;
  std::vector<std::size_t> u_columns;
  std::vector<std::size_t> v_columns;
  /// max |A W - B| of the normal equations at the solution.
  double normal_equation_residual = 0.0;

  Eigen::MatrixXd weights_u() const;
  Eigen::MatrixXd weights_v() const;
  /// |W_v|_F / |W_u|_F, 0 when both vanish.
  double weight_ratio() const;
  Eigen::Vector2d predict(const Eigen::RowVectorXd& x) const;
};

/// Minimizes (1/n) sum |y - W^T x - b|^2 + lambda |W|_F^2 in closed form.
LinearPolicy fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                       std::vector<std::size_t> u_columns, std::vector<std::size_t> v_columns,
                       double lambda);
LinearPolicy fit_ridge(const SimDataset& data, double lambda);

struct EvalResult {
  double ood_success = 0.0;
  double shortcut_degree = 0.0;
  double success_tolerance = 0.0;
  std::size_t trials = 0;
};

/// Rubric for one trial: 1 when the prediction lands within delta of the
/// shortcut target, 0.5 when the midpoint is the nearest of {instructed,
/// shortcut, midpoint}, else 0. Targets closer than delta score 0.
double shortcut_score(const Eigen::Vector2d& prediction, const Eigen::Vector2d& instructed,
                      const Eigen::Vector2d& shortcut, double delta);

/// Scene and instruction of sub-dataset i shown from the center of sub-dataset
/// j's viewpoint range, for every ordered i != j.
EvalResult evaluate_ood(const LinearPolicy& policy, const SimConfig& cfg, double delta);

/// Training pairings at the viewpoint centers. Shortcut degree is 0 here.
EvalResult evaluate_in_distribution(const LinearPolicy& policy, const SimConfig& cfg,
                                    double delta);

/// L2-loss gradients at zero weights: -2 E[(x_block - E x_block)(y - E y)^T].
struct GradientPair {
  Eigen::MatrixXd g_u;  // |u block| x target dims
  Eigen::MatrixXd g_v;
  double norm_u = 0.0;  // Frobenius norms
  double norm_v = 0.0;
};

GradientPair initial_gradients(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                               const std::vector<std::size_t>& u_columns,
                               const std::vector<std::size_t>& v_columns);
GradientPair initial_gradients(const SimDataset& data);

enum class Knob {
  kViewpointRadius,
  kViewpointCenterDistance,
  kPositionsPerSubdataset,
  kLayout,  // 0 = intertwined, 1 = separated
  kPerTaskViewpoints,  // 0 / 1
};

std::string_view to_string(Knob k);
Knob parse_knob(std::string_view s);
std::vector<double> default_grid(Knob k);

/// Base config with one knob overridden. Center distance spreads the centers
/// evenly around their current mean.
SimConfig apply_knob(const SimConfig& base, Knob knob, double value);

inline constexpr double kDefaultLambda = 0.005;
inline constexpr double kDefaultDelta = 0.1;

struct SweepRow {
  double knob_value = 0.0;
  double ood_success = 0.0;
  double shortcut_degree = 0.0;
  double weight_ratio = 0.0;
  std::uint64_t seed = 0;
};

/// One row per value, in input order. Points are evaluated in parallel.
std::vector<SweepRow> sweep(const SimConfig& base, Knob knob, const std::vector<double>& values,
                            double lambda = kDefaultLambda, double delta = kDefaultDelta);

}  // namespace fragscope::sim
