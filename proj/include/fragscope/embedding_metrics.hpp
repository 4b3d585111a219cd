#pragma once

// Gaussian-kernel diversity and disparity scores over embedding matrices.
//
//   diversity(D)  = 1 / E_{u,v ~ D, u != v}[exp(-t |u - v|^2)]
//   disparity     = m(m-1) / sum_{i != j} E_{u ~ D_i, v ~ D_j}[exp(-t |u - v|^2)]
//   ratio         = disparity / aggregate_i diversity(D_i)
//
// Kernel sums are accumulated exactly (see ExactSum), so exact-mode results
// are bit-identical under any row permutation and any worker count.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fragscope::embedding {

/// Row-major N x d matrix of feature vectors.
class EmbeddingSet {
 public:
  /// Throws ValidationError for empty shapes, size mismatch, non-finite
  /// entries, or (when normalized) a row norm further than 1e-6 from 1.
  EmbeddingSet(std::size_t rows, std::size_t cols, std::vector<double> values,
               bool normalized = false);

  static EmbeddingSet from_rows(const std::vector<std::vector<double>>& rows,
                                bool normalized = false);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool normalized() const { return normalized_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
  bool normalized_;
};

struct Group {
  std::string name;
  std::vector<std::size_t> indices;  // ascending row indices
};

/// Sub-dataset label per row. Groups are ordered by label so reports do
/// not depend on row order.
class Partition {
 public:
  explicit Partition(std::vector<std::string> labels);

  /// Single group "all" covering n rows.
  static Partition single(std::size_t n, std::string name = "all");

  std::size_t size() const { return labels_.size(); }
  std::span<const std::string> labels() const { return labels_; }
  std::span<const Group> groups() const { return groups_; }

 private:
  std::vector<std::string> labels_;
  std::vector<Group> groups_;
};

enum class EstimatorMode { kExact, kSubsample };
enum class Aggregation { kMean, kGeometric };

struct EstimatorConfig {
  EstimatorMode mode = EstimatorMode::kExact;
  // Sampled pairs per expectation (subsample only). A budget of at least the
  // row count is split evenly over rows, each drawing distinct partners.
  std::size_t pair_budget = 0;
  std::uint64_t seed = 0;
  Aggregation aggregation = Aggregation::kMean;
};

/// Temperatures swept when the caller supplies none; t = 20 is the headline value.
inline const std::vector<double> kDefaultTemperatures{0.5, 1, 2, 5, 10, 20, 50};

EmbeddingSet normalize_rows(const EmbeddingSet& e);

/// Mean kernel value over distinct ordered pairs inside the group, one per
/// temperature. Requires >= 2 rows and a normalized set.
std::vector<double> diversity_kernel_means(const EmbeddingSet& e, std::span<const std::size_t> group,
                                           std::span<const double> temperatures,
                                           const EstimatorConfig& cfg, std::uint64_t stream = 0);

double diversity(const EmbeddingSet& e, std::span<const std::size_t> group, double t,
                 const EstimatorConfig& cfg);

/// Requires >= 2 non-empty groups and a normalized set.
double disparity(const EmbeddingSet& e, const Partition& p, double t, const EstimatorConfig& cfg);

std::vector<double> disparity_sweep(const EmbeddingSet& e, const Partition& p,
                                    std::span<const double> temperatures,
                                    const EstimatorConfig& cfg);

double aggregate_diversity(std::span<const double> per_group, Aggregation how);

double fragmentation_ratio(double disparity, std::span<const double> per_group_diversity,
                           Aggregation how = Aggregation::kMean);

struct MetricReport {
  std::vector<double> temperatures;
  std::vector<std::string> groups;
  std::vector<std::size_t> group_sizes;
  /// diversity[g][k]: group g at temperatures[k].
  std::vector<std::vector<double>> diversity;
  /// Per temperature; empty optionals when fewer than two groups exist.
  std::vector<std::optional<double>> disparity;
  std::vector<std::optional<double>> ratio;
  EstimatorConfig estimator;
  std::vector<std::string> warnings;
};

/// Every (group, temperature) diversity plus per-temperature disparity and
/// ratio. Singleton groups score 1.0 and add a warning.
MetricReport temperature_sweep(const EmbeddingSet& e, const Partition& p,
                               std::span<const double> temperatures, const EstimatorConfig& cfg);

/// Full N x N squared-distance matrix, row-major, for external plotting tools.
std::vector<double> pairwise_sq_distances(const EmbeddingSet& e);

}  // namespace fragscope::embedding
