#pragma once

// Factor-level interventions on a mixture: bridge data shared by every
// sub-dataset, and full symmetrization of one factor.

#include <optional>
#include <vector>

#include "fragscope/factor_model.hpp"

namespace fragscope::bridge {

using factor::Factor;
using factor::MixtureModel;
using factor::Symbol;

struct BridgeSpec {
  Factor factor = Factor::kU;
  std::vector<Symbol> bridge_symbols;
  double epsilon = 0.0;  // mass moved onto the bridge symbols, in (0, 1)
};

/// Every component's chosen factor is rescaled by (1 - epsilon) and each
/// bridge symbol gains epsilon / |bridge_symbols|. A bridge symbol already in
/// a component's support has the bridge mass added to it.
MixtureModel apply_bridge(const MixtureModel& mix, const BridgeSpec& spec);

/// Replaces the chosen factor of every component with the uniform mixture of
/// all components' distributions for it.
MixtureModel symmetrize_factor(const MixtureModel& mix, Factor factor);

struct GridPoint {
  double epsilon = 0.0;
  double nmi = 0.0;
  std::optional<double> bound;  // overlap upper bound, two-component mixtures only
};

struct BridgePlan {
  std::optional<double> epsilon_star;  // empty when no grid point meets the target
  double achieved_nmi = 0.0;           // NMI at epsilon_star, or the grid minimum
  std::optional<double> bound_after;
  double baseline_nmi = 0.0;
  std::optional<double> baseline_bound;
  double target_nmi = 0.0;
  std::vector<GridPoint> grid;
  /// False when NMI increased somewhere along the grid.
  bool monotone = true;
  bool feasible() const { return epsilon_star.has_value(); }
};

/// Evaluates the exact NMI at every grid epsilon and returns the smallest
/// epsilon with NMI <= target. `spec_template.epsilon` is ignored.
BridgePlan plan_bridge(const MixtureModel& mix, const BridgeSpec& spec_template, double target_nmi,
                       const std::vector<double>& grid);

}  // namespace fragscope::bridge
