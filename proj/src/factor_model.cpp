#include "fragscope/factor_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "fragscope/errors.hpp"
#include "fragscope/parallel.hpp"
#include "fragscope/rng.hpp"

namespace fragscope::factor {
namespace {

void validate_masses(std::span<const double> mass, std::string_view what) {
  double total = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (!std::isfinite(mass[i]) || mass[i] < 0.0) {
      throw ValidationError(std::string(what) + ": mass[" + std::to_string(i) +
                            "] is negative or not finite");
    }
    total += mass[i];
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw ValidationError(std::string(what) + ": masses sum to " + std::to_string(total) +
                          ", expected 1");
  }
}

void validate_unique(std::span<const Symbol> support, std::string_view what) {
  std::unordered_set<std::string_view> seen;
  for (const auto& s : support) {
    if (!seen.insert(s).second) {
      throw ValidationError(std::string(what) + ": duplicate symbol '" + s + "'");
    }
  }
}

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

void require_two(const MixtureModel& mix, std::string_view op) {
  if (mix.size() != 2) {
    throw UnsupportedArityError(std::string(op) + " is defined for exactly two sub-datasets, got " +
                                std::to_string(mix.size()));
  }
}

// Summed mass of symbols carried with positive mass by both distributions.
double overlap_mass(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double pa = a.mass()[i];
    const double pb = b.mass_of(a.support()[i]);
    if (pa > 0.0 && pb > 0.0) total += pa + pb;
  }
  return total;
}

bool disjoint(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.mass()[i] > 0.0 && b.mass_of(a.support()[i]) > 0.0) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(Factor f) { return f == Factor::kU ? "u" : "v"; }

Factor parse_factor(std::string_view s) {
  if (s == "u") return Factor::kU;
  if (s == "v") return Factor::kV;
  throw ValidationError("factor must be 'u' or 'v', got '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

DiscreteDistribution::DiscreteDistribution(std::vector<Symbol> support, std::vector<double> mass)
    : support_(std::move(support)), mass_(std::move(mass)) {
  if (support_.empty()) throw ValidationError("distribution: empty support");
  if (support_.size() != mass_.size()) {
    throw ValidationError("distribution: " + std::to_string(support_.size()) + " symbols but " +
                          std::to_string(mass_.size()) + " masses");
  }
  validate_unique(support_, "distribution");
  validate_masses(mass_, "distribution");
}

DiscreteDistribution DiscreteDistribution::point(Symbol s) {
  return DiscreteDistribution({std::move(s)}, {1.0});
}

DiscreteDistribution DiscreteDistribution::uniform(std::vector<Symbol> support) {
  const std::size_t n = support.size();
  if (n == 0) throw ValidationError("distribution: empty support");
  return DiscreteDistribution(std::move(support),
                              std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double DiscreteDistribution::mass_of(std::string_view s) const {
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] == s) return mass_[i];
  }
  return 0.0;
}

bool DiscreteDistribution::contains(std::string_view s) const {
  return std::find(support_.begin(), support_.end(), s) != support_.end();
}

MixtureModel::MixtureModel(std::vector<SubDatasetFactors> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("mixture: at least one component required");
}

JointDistribution::JointDistribution(std::vector<Symbol> u_support, std::vector<Symbol> v_support,
                                     std::vector<double> mass)
    : u_support_(std::move(u_support)), v_support_(std::move(v_support)), mass_(std::move(mass)) {
  if (u_support_.empty() || v_support_.empty()) throw ValidationError("joint: empty support");
  if (mass_.size() != u_support_.size() * v_support_.size()) {
    throw ValidationError("joint: mass table does not match support sizes");
  }
  validate_unique(u_support_, "joint u support");
  validate_unique(v_support_, "joint v support");
  validate_masses(mass_, "joint");
}

DiscreteDistribution JointDistribution::u_marginal() const {
  std::vector<double> m(u_support_.size(), 0.0);
  for (std::size_t i = 0; i < u_support_.size(); ++i) {
    for (std::size_t j = 0; j < v_support_.size(); ++j) m[i] += at(i, j);
  }
  return DiscreteDistribution(u_support_, std::move(m));
}

DiscreteDistribution JointDistribution::v_marginal() const {
  std::vector<double> m(v_support_.size(), 0.0);
  for (std::size_t i = 0; i < u_support_.size(); ++i) {
    for (std::size_t j = 0; j < v_support_.size(); ++j) m[j] += at(i, j);
  }
  return DiscreteDistribution(v_support_, std::move(m));
}

// ---------------------------------------------------------------------------

double entropy(const DiscreteDistribution& d) {
  double h = 0.0;
  for (double p : d.mass()) h -= plogp(p);
  return std::max(h, 0.0);
}

DiscreteDistribution mixture_marginal(const MixtureModel& mix, Factor which) {
  std::vector<Symbol> support;
  std::unordered_map<std::string_view, std::size_t> index;
  for (const auto& c : mix.components()) {
    for (const auto& s : c.factor(which).support()) {
      if (index.emplace(s, support.size()).second) support.push_back(s);
    }
  }
  std::vector<double> mass(support.size(), 0.0);
  for (const auto& c : mix.components()) {
    const auto& d = c.factor(which);
    for (std::size_t i = 0; i < d.size(); ++i) mass[index.at(d.support()[i])] += d.mass()[i];
  }
  const double m = static_cast<double>(mix.size());
  for (double& p : mass) p /= m;
  return DiscreteDistribution(std::move(support), std::move(mass));
}

JointDistribution joint_mixture(const MixtureModel& mix) {
  const auto pu = mixture_marginal(mix, Factor::kU);
  const auto pv = mixture_marginal(mix, Factor::kV);
  const std::size_t nu = pu.size();
  const std::size_t nv = pv.size();
  std::vector<double> mass(nu * nv, 0.0);
  for (const auto& c : mix.components()) {
    for (std::size_t i = 0; i < nu; ++i) {
      const double a = c.u.mass_of(pu.support()[i]);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < nv; ++j) mass[i * nv + j] += a * c.v.mass_of(pv.support()[j]);
    }
  }
  const double m = static_cast<double>(mix.size());
  for (double& p : mass) p /= m;
  return JointDistribution({pu.support().begin(), pu.support().end()},
                           {pv.support().begin(), pv.support().end()}, std::move(mass));
}

double mutual_information(const JointDistribution& j) {
  const auto pu = j.u_marginal();
  const auto pv = j.v_marginal();
  double mi = 0.0;
  for (std::size_t a = 0; a < pu.size(); ++a) {
    for (std::size_t b = 0; b < pv.size(); ++b) {
      const double p = j.at(a, b);
      if (p > 0.0) mi += p * std::log2(p / (pu.mass()[a] * pv.mass()[b]));
    }
  }
  // Rounding can leave a tiny negative on product tables.
  return std::max(mi, 0.0);
}

NmiResult normalized_mi(const MixtureModel& mix) {
  NmiResult r;
  r.entropy_u = entropy(mixture_marginal(mix, Factor::kU));
  r.entropy_v = entropy(mixture_marginal(mix, Factor::kV));
  r.mutual_information = mutual_information(joint_mixture(mix));
  const double denom = r.entropy_u + r.entropy_v;
  if (denom <= 0.0) {
    r.degenerate = true;
    r.value = 0.0;
  } else {
    r.value = 2.0 * r.mutual_information / denom;
  }
  return r;
}

double c_diversity(const MixtureModel& mix) {
  double total = 0.0;
  for (const auto& c : mix.components()) total += entropy(c.u) + entropy(c.v);
  return total;
}

double c_interleave(const MixtureModel& mix) {
  require_two(mix, "c_interleave");
  return overlap_mass(mix[0].u, mix[1].u) + overlap_mass(mix[0].v, mix[1].v);
}

bool supports_disjoint(const MixtureModel& mix) {
  for (std::size_t a = 0; a < mix.size(); ++a) {
    for (std::size_t b = a + 1; b < mix.size(); ++b) {
      if (!disjoint(mix[a].u, mix[b].u) || !disjoint(mix[a].v, mix[b].v)) return false;
    }
  }
  return true;
}

double prop1_predicted_nmi(const MixtureModel& mix) {
  require_two(mix, "prop1_predicted_nmi");
  if (!supports_disjoint(mix)) {
    throw PreconditionError(
        "prop1_predicted_nmi requires disjoint u and v supports; use prop2_nmi_upper_bound for "
        "overlapping supports");
  }
  return 4.0 / (c_diversity(mix) + 4.0);
}

double prop2_nmi_upper_bound(const MixtureModel& mix) {
  require_two(mix, "prop2_nmi_upper_bound");
  const double cd = c_diversity(mix);
  const double gap = 4.0 - c_interleave(mix);
  const double denom = cd + gap;
  if (denom <= 0.0) return 0.0;
  return std::clamp(1.0 - cd / denom, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> random_masses(Rng& rng, std::size_t n) {
  // Exponential draws raised to a random power: concentration varies from
  // near-uniform to strongly peaked between trials.
  const double power = rng.uniform(0.5, 4.0);
  std::vector<double> w(n);
  for (auto& x : w) x = std::pow(rng.exponential(), power);
  double total = 0.0;
  for (double x : w) total += x;
  for (auto& x : w) x /= total;
  return w;
}

std::vector<std::size_t> shuffled(Rng& rng, std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

DiscreteDistribution make_factor(Rng& rng, char prefix, std::span<const std::size_t> picks) {
  std::vector<Symbol> support;
  support.reserve(picks.size());
  for (auto p : picks) support.push_back(std::string(1, prefix) + std::to_string(p));
  return DiscreteDistribution(std::move(support), random_masses(rng, picks.size()));
}

std::size_t effective_alphabet(const VerificationConfig& cfg) {
  return cfg.alphabet == 0 ? 2 * cfg.max_support : cfg.alphabet;
}

void validate(const VerificationConfig& cfg) {
  if (cfg.trials < 1) throw ValidationError("verify_propositions: trials must be >= 1");
  if (cfg.min_support < 1 || cfg.min_support > cfg.max_support) {
    throw ValidationError("verify_propositions: need 1 <= min_support <= max_support");
  }
  const std::size_t a = effective_alphabet(cfg);
  if (cfg.mode == SupportMode::kDisjoint && a < 2) {
    throw ValidationError("verify_propositions: disjoint supports need an alphabet of >= 2");
  }
  if (a < cfg.min_support) {
    throw ValidationError("verify_propositions: alphabet smaller than min_support");
  }
}

// One factor pair (component 1, component 2) with the requested overlap structure.
std::pair<DiscreteDistribution, DiscreteDistribution> factor_pair(Rng& rng,
                                                                  const VerificationConfig& cfg,
                                                                  char prefix) {
  const std::size_t a = effective_alphabet(cfg);
  const std::size_t hi = std::min(cfg.max_support, a);
  auto draw_size = [&](std::size_t cap) -> std::size_t {
    if (cfg.force_point_mass) return 1;
    const std::size_t top = std::min(hi, cap);
    const std::size_t lo = std::min(cfg.min_support, top);
    return lo + rng.below(top - lo + 1);
  };
  if (cfg.mode == SupportMode::kDisjoint) {
    const auto order = shuffled(rng, a);
    const std::size_t s1 = draw_size(a - 1);
    const std::size_t s2 = draw_size(a - s1);
    std::span<const std::size_t> all(order);
    return {make_factor(rng, prefix, all.subspan(0, s1)), make_factor(rng, prefix, all.subspan(s1, s2))};
  }
  const std::size_t s1 = draw_size(a);
  const auto o1 = shuffled(rng, a);
  const std::size_t s2 = draw_size(a);
  const auto o2 = shuffled(rng, a);
  return {make_factor(rng, prefix, std::span(o1).subspan(0, s1)),
          make_factor(rng, prefix, std::span(o2).subspan(0, s2))};
}

}  // namespace

MixtureModel random_mixture(const VerificationConfig& cfg, std::uint64_t trial_seed) {
  validate(cfg);
  Rng rng(trial_seed);
  // Overlapping mode rejects draws where neither factor shares a symbol.
  for (int attempt = 0;; ++attempt) {
    auto [u1, u2] = factor_pair(rng, cfg, 'u');
    auto [v1, v2] = factor_pair(rng, cfg, 'v');
    MixtureModel mix({{std::move(u1), std::move(v1)}, {std::move(u2), std::move(v2)}});
    if (cfg.mode == SupportMode::kDisjoint || !supports_disjoint(mix)) return mix;
    if (attempt > 10000) {
      throw ValidationError("verify_propositions: cannot draw overlapping supports; enlarge max_support");
    }
  }
}

VerificationReport verify_propositions(const VerificationConfig& cfg) {
  validate(cfg);
  VerificationReport report;
  report.config = cfg;
  report.trials.resize(cfg.trials);
  std::vector<double> identity_gap(cfg.trials, 0.0);

  parallel_for(cfg.trials, [&](std::size_t t) {
    const auto mix = random_mixture(cfg, derive_seed(cfg.seed, t));
    auto& rec = report.trials[t];
    rec.nmi = normalized_mi(mix).value;
    rec.c_diversity = c_diversity(mix);
    rec.c_interleave = c_interleave(mix);
    if (cfg.mode == SupportMode::kDisjoint) {
      rec.prediction = prop1_predicted_nmi(mix);
      identity_gap[t] = std::abs(prop2_nmi_upper_bound(mix) - rec.prediction);
    } else {
      rec.prediction = prop2_nmi_upper_bound(mix);
    }
    rec.residual = rec.nmi - rec.prediction;
  });

  std::size_t worst = cfg.trials;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto& rec = report.trials[t];
    if (cfg.mode == SupportMode::kDisjoint) {
      report.max_equality_residual = std::max(report.max_equality_residual, std::abs(rec.residual));
      report.max_bound_identity_gap = std::max(report.max_bound_identity_gap, identity_gap[t]);
    } else {
      if (rec.residual > report.max_bound_violation) {
        report.max_bound_violation = rec.residual;
        worst = t;
      }
      if (rec.residual > 1e-10) ++report.bound_violations;
    }
  }
  if (worst < cfg.trials) report.worst_violation = random_mixture(cfg, derive_seed(cfg.seed, worst));
  return report;
}

}  // namespace fragscope::factor
