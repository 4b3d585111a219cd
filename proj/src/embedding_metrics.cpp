#include "fragscope/embedding_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fragscope/errors.hpp"
#include "fragscope/exact_sum.hpp"
#include "fragscope/parallel.hpp"
#include "fragscope/rng.hpp"

namespace fragscope::embedding {
namespace {

constexpr std::size_t kRowBlock = 32;
constexpr std::size_t kSampleChunk = 4096;
constexpr std::uint64_t kDiversityTag = 0xd1;
constexpr std::uint64_t kDisparityTag = 0xd2;

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void validate_temperatures(std::span<const double> temperatures) {
  if (temperatures.empty()) throw ValidationError("at least one temperature is required");
  for (double t : temperatures) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw ValidationError("temperature must be finite and >= 0, got " + std::to_string(t));
    }
  }
}

void require_normalized(const EmbeddingSet& e) {
  if (!e.normalized()) throw PreconditionError("embedding rows must be normalized first");
}

void validate_estimator(const EstimatorConfig& cfg) {
  if (cfg.mode == EstimatorMode::kSubsample && cfg.pair_budget < 1) {
    throw ValidationError("subsample estimator requires pair_budget >= 1");
  }
}

using SumRow = std::vector<ExactSum>;

void accumulate(SumRow& sums, double d2, std::span<const double> temperatures) {
  for (std::size_t k = 0; k < temperatures.size(); ++k) sums[k].add(std::exp(-temperatures[k] * d2));
}

SumRow merge_in_order(std::vector<SumRow>& parts, std::size_t width) {
  SumRow total(width);
  for (auto& p : parts) {
    for (std::size_t k = 0; k < width; ++k) total[k].merge(p[k]);
  }
  return total;
}

// Sum of kernels over unordered pairs {i < j} inside one index list.
SumRow within_sums(const EmbeddingSet& e, std::span<const std::size_t> idx,
                   std::span<const double> temps) {
  const std::size_t n = idx.size();
  const std::size_t blocks = (n + kRowBlock - 1) / kRowBlock;
  std::vector<SumRow> parts(blocks, SumRow(temps.size()));
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kRowBlock);
    for (std::size_t a = b * kRowBlock; a < end; ++a) {
      const auto ra = e.row(idx[a]);
      for (std::size_t c = a + 1; c < n; ++c) accumulate(parts[b], sq_distance(ra, e.row(idx[c])), temps);
    }
  });
  return merge_in_order(parts, temps.size());
}

// Sum of kernels over all |A| * |B| cross pairs.
SumRow cross_sums(const EmbeddingSet& e, std::span<const std::size_t> lhs,
                  std::span<const std::size_t> rhs, std::span<const double> temps) {
  const std::size_t blocks = (lhs.size() + kRowBlock - 1) / kRowBlock;
  std::vector<SumRow> parts(blocks, SumRow(temps.size()));
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(lhs.size(), (b + 1) * kRowBlock);
    for (std::size_t a = b * kRowBlock; a < end; ++a) {
      const auto ra = e.row(lhs[a]);
      for (std::size_t c : rhs) accumulate(parts[b], sq_distance(ra, e.row(c)), temps);
    }
  });
  return merge_in_order(parts, temps.size());
}

// Sum of kernels over `budget` pairs drawn uniformly with replacement.
// `draw` maps an Rng to one (row, row) pair. Chunk c uses its own derived
// stream, so the sample never depends on the worker count.
template <typename Draw>
SumRow sampled_sums(const EmbeddingSet& e, std::size_t budget, std::uint64_t seed,
                    std::span<const double> temps, Draw draw) {
  const std::size_t chunks = (budget + kSampleChunk - 1) / kSampleChunk;
  std::vector<SumRow> parts(chunks, SumRow(temps.size()));
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const std::size_t count = std::min(kSampleChunk, budget - c * kSampleChunk);
    for (std::size_t s = 0; s < count; ++s) {
      const auto [i, j] = draw(rng);
      accumulate(parts[c], sq_distance(e.row(i), e.row(j)), temps);
    }
  });
  return merge_in_order(parts, temps.size());
}

// Stratified estimate of the mean kernel between the rows of `rows` and the
// rows of `pool`. Each row gets an equal share of the budget, draws that many
// distinct partners (Floyd's algorithm) and contributes its own sample mean;
// a share that covers every partner enumerates the row exactly. With `within`
// set, `rows` and `pool` are the same list and self-pairs are skipped.
// Returns the per-temperature sum of row means.
SumRow stratified_row_means(const EmbeddingSet& e, std::span<const std::size_t> rows,
                            std::span<const std::size_t> pool, bool within, std::size_t budget,
                            std::uint64_t seed, std::span<const double> temps) {
  const std::size_t n = rows.size();
  const std::size_t candidates = within ? pool.size() - 1 : pool.size();
  const std::size_t blocks = (n + kRowBlock - 1) / kRowBlock;
  std::vector<SumRow> parts(blocks, SumRow(temps.size()));
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<char> taken(candidates, 0);
    std::vector<std::size_t> picks;
    std::vector<double> row_sum(temps.size());
    const std::size_t end = std::min(n, (b + 1) * kRowBlock);
    for (std::size_t a = b * kRowBlock; a < end; ++a) {
      const std::size_t share = budget / n + (a < budget % n ? 1 : 0);
      picks.clear();
      if (share >= candidates) {
        for (std::size_t k = 0; k < candidates; ++k) picks.push_back(k);
      } else {
        Rng rng(derive_seed(seed, a));
        for (std::size_t j = candidates - share; j < candidates; ++j) {
          const std::size_t t = rng.below(j + 1);
          const std::size_t pick = taken[t] ? j : t;
          taken[pick] = 1;
          picks.push_back(pick);
        }
        for (auto k : picks) taken[k] = 0;
        std::sort(picks.begin(), picks.end());
      }
      const auto ra = e.row(rows[a]);
      std::fill(row_sum.begin(), row_sum.end(), 0.0);
      for (auto k : picks) {
        const std::size_t other = within && k >= a ? pool[k + 1] : pool[k];
        const double d2 = sq_distance(ra, e.row(other));
        for (std::size_t t = 0; t < temps.size(); ++t) row_sum[t] += std::exp(-temps[t] * d2);
      }
      const double count = static_cast<double>(picks.size());
      for (std::size_t t = 0; t < temps.size(); ++t) parts[b][t].add(row_sum[t] / count);
    }
  });
  return merge_in_order(parts, temps.size());
}

std::vector<double> means(const SumRow& sums, double count) {
  std::vector<double> out(sums.size());
  for (std::size_t k = 0; k < sums.size(); ++k) out[k] = sums[k].value() / count;
  return out;
}

// Mean cross kernel between two groups, one value per temperature.
std::vector<double> cross_kernel_means(const EmbeddingSet& e, const Group& a, const Group& b,
                                       std::size_t pair_index, std::span<const double> temps,
                                       const EstimatorConfig& cfg) {
  if (cfg.mode == EstimatorMode::kExact) {
    return means(cross_sums(e, a.indices, b.indices, temps),
                 static_cast<double>(a.indices.size()) * static_cast<double>(b.indices.size()));
  }
  const auto seed = derive_seed(cfg.seed, kDisparityTag, pair_index);
  if (cfg.pair_budget >= a.indices.size()) {
    return means(stratified_row_means(e, a.indices, b.indices, false, cfg.pair_budget, seed, temps),
                 static_cast<double>(a.indices.size()));
  }
  const auto sums = sampled_sums(e, cfg.pair_budget, seed, temps, [&](Rng& rng) {
    return std::pair{a.indices[rng.below(a.indices.size())], b.indices[rng.below(b.indices.size())]};
  });
  return means(sums, static_cast<double>(cfg.pair_budget));
}

}  // namespace

// ---------------------------------------------------------------------------

EmbeddingSet::EmbeddingSet(std::size_t rows, std::size_t cols, std::vector<double> values,
                           bool normalized)
    : rows_(rows), cols_(cols), values_(std::move(values)), normalized_(normalized) {
  if (rows_ < 1 || cols_ < 1) throw ValidationError("embedding set needs N >= 1 and d >= 1");
  if (values_.size() != rows_ * cols_) {
    throw ValidationError("embedding set: expected " + std::to_string(rows_ * cols_) +
                          " values, got " + std::to_string(values_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("embedding set: non-finite value in row " + std::to_string(i / cols_));
    }
  }
  if (normalized_) {
    for (std::size_t i = 0; i < rows_; ++i) {
      const auto r = row(i);
      const double norm = std::sqrt(sq_distance(r, std::vector<double>(cols_, 0.0)));
      if (std::abs(norm - 1.0) > 1e-6) {
        throw ValidationError("embedding set: row " + std::to_string(i) + " is not unit norm");
      }
    }
  }
}

EmbeddingSet EmbeddingSet::from_rows(const std::vector<std::vector<double>>& rows, bool normalized) {
  if (rows.empty()) throw ValidationError("embedding set needs N >= 1 and d >= 1");
  const std::size_t d = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) {
      throw ValidationError("embedding set: row " + std::to_string(i) + " has wrong width");
    }
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return EmbeddingSet(rows.size(), d, std::move(values), normalized);
}

Partition::Partition(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError("partition: no rows");
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels_.size(); ++i) by_label[labels_[i]].push_back(i);
  for (auto& [name, idx] : by_label) groups_.push_back({name, std::move(idx)});
}

Partition Partition::single(std::size_t n, std::string name) {
  return Partition(std::vector<std::string>(n, std::move(name)));
}

EmbeddingSet normalize_rows(const EmbeddingSet& e) {
  std::vector<double> out(e.values().begin(), e.values().end());
  for (std::size_t i = 0; i < e.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < e.cols(); ++k) s += out[i * e.cols() + k] * out[i * e.cols() + k];
    if (s == 0.0) throw ValidationError("cannot normalize zero-norm row " + std::to_string(i));
    const double norm = std::sqrt(s);
    for (std::size_t k = 0; k < e.cols(); ++k) out[i * e.cols() + k] /= norm;
  }
  return EmbeddingSet(e.rows(), e.cols(), std::move(out), true);
}

std::vector<double> diversity_kernel_means(const EmbeddingSet& e, std::span<const std::size_t> group,
                                           std::span<const double> temperatures,
                                           const EstimatorConfig& cfg, std::uint64_t stream) {
  require_normalized(e);
  validate_temperatures(temperatures);
  validate_estimator(cfg);
  const std::size_t n = group.size();
  if (n < 2) {
    throw InsufficientDataError("diversity needs at least 2 rows in the group, got " +
                                std::to_string(n));
  }
  for (auto i : group) {
    if (i >= e.rows()) throw ValidationError("group index " + std::to_string(i) + " out of range");
  }
  if (cfg.mode == EstimatorMode::kExact) {
    return means(within_sums(e, group, temperatures),
                 static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
  }
  const auto seed = derive_seed(cfg.seed, kDiversityTag, stream);
  if (cfg.pair_budget >= n) {
    return means(stratified_row_means(e, group, group, true, cfg.pair_budget, seed, temperatures),
                 static_cast<double>(n));
  }
  const auto sums = sampled_sums(e, cfg.pair_budget, seed,
                                 temperatures, [&](Rng& rng) {
                                   const auto i = rng.below(n);
                                   auto j = rng.below(n - 1);
                                   if (j >= i) ++j;
                                   return std::pair{group[i], group[j]};
                                 });
  return means(sums, static_cast<double>(cfg.pair_budget));
}

double diversity(const EmbeddingSet& e, std::span<const std::size_t> group, double t,
                 const EstimatorConfig& cfg) {
  const double temps[] = {t};
  return 1.0 / diversity_kernel_means(e, group, temps, cfg).front();
}

std::vector<double> disparity_sweep(const EmbeddingSet& e, const Partition& p,
                                    std::span<const double> temperatures,
                                    const EstimatorConfig& cfg) {
  require_normalized(e);
  validate_temperatures(temperatures);
  validate_estimator(cfg);
  if (p.size() != e.rows()) throw ValidationError("partition size does not match embedding rows");
  const auto groups = p.groups();
  const std::size_t m = groups.size();
  if (m < 2) {
    throw InsufficientDataError("disparity needs at least 2 sub-datasets, got " + std::to_string(m));
  }
  // E_ij = E_ji, so each unordered pair is evaluated once and counted twice.
  std::vector<double> total(temperatures.size(), 0.0);
  std::size_t pair_index = 0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b, ++pair_index) {
      const auto mk = cross_kernel_means(e, groups[a], groups[b], pair_index, temperatures, cfg);
      for (std::size_t k = 0; k < mk.size(); ++k) total[k] += 2.0 * mk[k];
    }
  }
  const double pairs = static_cast<double>(m) * static_cast<double>(m - 1);
  std::vector<double> out(temperatures.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = pairs / total[k];
  return out;
}

double disparity(const EmbeddingSet& e, const Partition& p, double t, const EstimatorConfig& cfg) {
  const double temps[] = {t};
  return disparity_sweep(e, p, temps, cfg).front();
}

double aggregate_diversity(std::span<const double> per_group, Aggregation how) {
  if (per_group.empty()) throw ValidationError("no diversity scores to aggregate");
  double acc = 0.0;
  if (how == Aggregation::kMean) {
    for (double d : per_group) acc += d;
    return acc / static_cast<double>(per_group.size());
  }
  for (double d : per_group) acc += std::log(d);
  return std::exp(acc / static_cast<double>(per_group.size()));
}

double fragmentation_ratio(double disparity, std::span<const double> per_group_diversity,
                           Aggregation how) {
  return disparity / aggregate_diversity(per_group_diversity, how);
}

MetricReport temperature_sweep(const EmbeddingSet& e, const Partition& p,
                               std::span<const double> temperatures, const EstimatorConfig& cfg) {
  require_normalized(e);
  validate_temperatures(temperatures);
  validate_estimator(cfg);
  if (p.size() != e.rows()) throw ValidationError("partition size does not match embedding rows");

  MetricReport r;
  r.temperatures.assign(temperatures.begin(), temperatures.end());
  r.estimator = cfg;
  const auto groups = p.groups();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    r.groups.push_back(groups[g].name);
    r.group_sizes.push_back(groups[g].indices.size());
    if (groups[g].indices.size() < 2) {
      r.diversity.emplace_back(temperatures.size(), 1.0);
      r.warnings.push_back("group '" + groups[g].name + "' has a single row; diversity set to 1");
      continue;
    }
    const auto km = diversity_kernel_means(e, groups[g].indices, temperatures, cfg, g);
    std::vector<double> row(km.size());
    for (std::size_t k = 0; k < km.size(); ++k) row[k] = 1.0 / km[k];
    r.diversity.push_back(std::move(row));
  }

  if (groups.size() < 2) {
    r.disparity.assign(temperatures.size(), std::nullopt);
    r.ratio.assign(temperatures.size(), std::nullopt);
    r.warnings.push_back("fewer than two sub-datasets; disparity and ratio omitted");
    return r;
  }
  const auto disp = disparity_sweep(e, p, temperatures, cfg);
  std::vector<double> column(groups.size());
  for (std::size_t k = 0; k < temperatures.size(); ++k) {
    for (std::size_t g = 0; g < groups.size(); ++g) column[g] = r.diversity[g][k];
    r.disparity.emplace_back(disp[k]);
    r.ratio.emplace_back(fragmentation_ratio(disp[k], column, cfg.aggregation));
  }
  return r;
}

std::vector<double> pairwise_sq_distances(const EmbeddingSet& e) {
  const std::size_t n = e.rows();
  std::vector<double> out(n * n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = sq_distance(e.row(i), e.row(j));
  });
  return out;
}

}  // namespace fragscope::embedding
