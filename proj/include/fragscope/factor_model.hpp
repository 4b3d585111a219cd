#pragma once

// Exact discrete-probability machinery for mixtures of sub-datasets whose
// task-relevant factor u and task-irrelevant factor v are independent inside
// each sub-dataset. All quantities are in bits.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fragscope::factor {

using Symbol = std::string;

/// Masses must be non-negative and sum to 1 within this tolerance. Inputs
/// are never renormalized.
inline constexpr double kMassTolerance = 1e-12;

enum class Factor { kU, kV };

std::string_view to_string(Factor f);
Factor parse_factor(std::string_view s);  // "u" | "v"

/// Finite distribution over opaque symbols.
class DiscreteDistribution {
 public:
  /// Throws ValidationError on empty support, size mismatch, duplicate
  /// symbols, negative or non-finite masses, or a total away from 1.
  DiscreteDistribution(std::vector<Symbol> support, std::vector<double> mass);

  static DiscreteDistribution point(Symbol s);
  static DiscreteDistribution uniform(std::vector<Symbol> support);

  std::span<const Symbol> support() const { return support_; }
  std::span<const double> mass() const { return mass_; }
  std::size_t size() const { return support_.size(); }

  /// Mass of s, 0 when s is not in the support.
  double mass_of(std::string_view s) const;
  bool contains(std::string_view s) const;

  bool operator==(const DiscreteDistribution&) const = default;

 private:
  std::vector<Symbol> support_;
  std::vector<double> mass_;
};

/// One sub-dataset. The joint of u and v is always the product of these
/// marginals; it is derived on demand and never stored.
struct SubDatasetFactors {
  DiscreteDistribution u;
  DiscreteDistribution v;

  const DiscreteDistribution& factor(Factor f) const { return f == Factor::kU ? u : v; }
  DiscreteDistribution& factor(Factor f) { return f == Factor::kU ? u : v; }

  bool operator==(const SubDatasetFactors&) const = default;
};

/// Uniform mixture of m >= 1 sub-datasets.
class MixtureModel {
 public:
  explicit MixtureModel(std::vector<SubDatasetFactors> components);

  std::span<const SubDatasetFactors> components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  const SubDatasetFactors& operator[](std::size_t i) const { return components_[i]; }

  bool operator==(const MixtureModel&) const = default;

 private:
  std::vector<SubDatasetFactors> components_;
};

/// Tabulated joint p(u, v), row-major over (u_support x v_support).
class JointDistribution {
 public:
  JointDistribution(std::vector<Symbol> u_support, std::vector<Symbol> v_support,
                    std::vector<double> mass);

  std::span<const Symbol> u_support() const { return u_support_; }
  std::span<const Symbol> v_support() const { return v_support_; }
  std::span<const double> mass() const { return mass_; }
  double at(std::size_t iu, std::size_t iv) const { return mass_[iu * v_support_.size() + iv]; }

  DiscreteDistribution u_marginal() const;
  DiscreteDistribution v_marginal() const;

 private:
  std::vector<Symbol> u_support_;
  std::vector<Symbol> v_support_;
  std::vector<double> mass_;
};

double entropy(const DiscreteDistribution& d);

/// Support is the union of component supports in first-appearance order.
DiscreteDistribution mixture_marginal(const MixtureModel& mix, Factor which);

JointDistribution joint_mixture(const MixtureModel& mix);

double mutual_information(const JointDistribution& j);

struct NmiResult {
  double value = 0.0;
  double mutual_information = 0.0;
  double entropy_u = 0.0;
  double entropy_v = 0.0;
  /// Set when H(u) + H(v) = 0; value is then defined as 0.
  bool degenerate = false;
};

/// 2 I(u, v) / (H(u) + H(v)) of the mixture.
NmiResult normalized_mi(const MixtureModel& mix);

/// Sum over components of H(u_i) + H(v_i). Defined for any m.
double c_diversity(const MixtureModel& mix);

/// Overlapping mass of both factors between the two components; m must be 2.
double c_interleave(const MixtureModel& mix);

bool supports_disjoint(const MixtureModel& mix);

/// 4 / (C_diversity + 4). Requires m = 2 and disjoint supports for both factors.
double prop1_predicted_nmi(const MixtureModel& mix);

/// 1 - C_diversity / (C_diversity + 4 - C_interleave). Requires m = 2.
/// When the denominator vanishes (identical point masses) the bound is 0.
double prop2_nmi_upper_bound(const MixtureModel& mix);

enum class SupportMode { kDisjoint, kOverlapping };

struct VerificationConfig {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t min_support = 1;
  std::size_t max_support = 8;
  /// Symbols available per factor; 0 selects 2 * max_support.
  std::size_t alphabet = 0;
  SupportMode mode = SupportMode::kDisjoint;
  /// Forces every factor to a single symbol.
  bool force_point_mass = false;
};

struct TrialRecord {
  double nmi = 0.0;
  double prediction = 0.0;  // 4 / (Cd + 4) when disjoint, the upper bound when overlapping
  double residual = 0.0;    // nmi - prediction
  double c_diversity = 0.0;
  double c_interleave = 0.0;
};

struct VerificationReport {
  VerificationConfig config;
  std::vector<TrialRecord> trials;
  /// max |nmi - 4 / (Cd + 4)| over disjoint trials.
  double max_equality_residual = 0.0;
  /// max (nmi - bound) over overlapping trials, clamped below at 0.
  double max_bound_violation = 0.0;
  /// Trials with nmi > bound + 1e-10.
  std::size_t bound_violations = 0;
  /// max gap between the upper bound and 4 / (Cd + 4) on disjoint trials.
  double max_bound_identity_gap = 0.0;
  /// Mixture attaining max_bound_violation, when any violation occurred.
  std::optional<MixtureModel> worst_violation;
};

/// Randomized harness: draws m = 2 mixtures with the requested support
/// structure and compares exact NMI against the closed forms. Deterministic
/// given the seed.
VerificationReport verify_propositions(const VerificationConfig& cfg);

/// Draws one random two-component mixture (exposed for property tests).
MixtureModel random_mixture(const VerificationConfig& cfg, std::uint64_t trial_seed);

}  // namespace fragscope::factor
