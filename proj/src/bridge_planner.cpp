#include "fragscope/bridge_planner.hpp"

#include <algorithm>
#include <unordered_set>

#include "fragscope/errors.hpp"
#include "fragscope/parallel.hpp"

namespace fragscope::bridge {
namespace {

using factor::DiscreteDistribution;
using factor::SubDatasetFactors;

void validate_symbols(const std::vector<Symbol>& symbols) {
  if (symbols.empty()) throw ValidationError("bridge: at least one bridge symbol is required");
  std::unordered_set<std::string_view> seen;
  for (const auto& s : symbols) {
    if (!seen.insert(s).second) throw ValidationError("bridge: duplicate bridge symbol '" + s + "'");
  }
}

DiscreteDistribution bridged(const DiscreteDistribution& d, const std::vector<Symbol>& symbols,
                             double epsilon) {
  std::vector<Symbol> support(d.support().begin(), d.support().end());
  std::vector<double> mass(d.mass().begin(), d.mass().end());
  for (double& p : mass) p *= 1.0 - epsilon;
  const double share = epsilon / static_cast<double>(symbols.size());
  for (const auto& s : symbols) {
    const auto it = std::find(support.begin(), support.end(), s);
    if (it == support.end()) {
      support.push_back(s);
      mass.push_back(share);
    } else {
      mass[static_cast<std::size_t>(it - support.begin())] += share;
    }
  }
  return DiscreteDistribution(std::move(support), std::move(mass));
}

std::optional<double> bound_if_pair(const MixtureModel& mix) {
  if (mix.size() != 2) return std::nullopt;
  return factor::prop2_nmi_upper_bound(mix);
}

}  // namespace

MixtureModel apply_bridge(const MixtureModel& mix, const BridgeSpec& spec) {
  if (!(spec.epsilon > 0.0 && spec.epsilon < 1.0)) {
    throw ValidationError("bridge: epsilon must lie in (0, 1)");
  }
  validate_symbols(spec.bridge_symbols);
  std::vector<SubDatasetFactors> out(mix.components().begin(), mix.components().end());
  for (auto& c : out) c.factor(spec.factor) = bridged(c.factor(spec.factor), spec.bridge_symbols, spec.epsilon);
  return MixtureModel(std::move(out));
}

MixtureModel symmetrize_factor(const MixtureModel& mix, Factor factor) {
  const auto pooled = factor::mixture_marginal(mix, factor);
  std::vector<SubDatasetFactors> out(mix.components().begin(), mix.components().end());
  for (auto& c : out) c.factor(factor) = pooled;
  return MixtureModel(std::move(out));
}

BridgePlan plan_bridge(const MixtureModel& mix, const BridgeSpec& spec_template, double target_nmi,
                       const std::vector<double>& grid) {
  if (grid.empty()) throw ValidationError("plan_bridge: epsilon grid is empty");
  if (!(target_nmi >= 0.0 && target_nmi < 1.0)) {
    throw ValidationError("plan_bridge: target NMI must lie in [0, 1)");
  }
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ValidationError("plan_bridge: epsilon grid must be sorted ascending");
  }
  validate_symbols(spec_template.bridge_symbols);

  BridgePlan plan;
  plan.target_nmi = target_nmi;
  plan.baseline_nmi = factor::normalized_mi(mix).value;
  plan.baseline_bound = bound_if_pair(mix);
  plan.grid.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    BridgeSpec spec = spec_template;
    spec.epsilon = grid[i];
    const auto after = apply_bridge(mix, spec);
    plan.grid[i] = {grid[i], factor::normalized_mi(after).value, bound_if_pair(after)};
  });

  for (std::size_t i = 1; i < plan.grid.size(); ++i) {
    if (plan.grid[i].nmi > plan.grid[i - 1].nmi + 1e-12) plan.monotone = false;
  }
  const auto hit = std::find_if(plan.grid.begin(), plan.grid.end(),
                                [&](const GridPoint& g) { return g.nmi <= target_nmi; });
  if (hit != plan.grid.end()) {
    plan.epsilon_star = hit->epsilon;
    plan.achieved_nmi = hit->nmi;
    plan.bound_after = hit->bound;
  } else {
    const auto best = std::min_element(plan.grid.begin(), plan.grid.end(),
                                       [](const GridPoint& a, const GridPoint& b) { return a.nmi < b.nmi; });
    plan.achieved_nmi = best->nmi;
    plan.bound_after = best->bound;
  }
  return plan;
}

}  // namespace fragscope::bridge
