#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fragscope/embedding_metrics.hpp"
#include "fragscope/errors.hpp"
#include "fragscope/parallel.hpp"

using namespace fragscope;
using namespace fragscope::embedding;

namespace {

EstimatorConfig exact() { return {}; }

EstimatorConfig subsample(std::size_t budget, std::uint64_t seed) {
  EstimatorConfig c;
  c.mode = EstimatorMode::kSubsample;
  c.pair_budget = budget;
  c.seed = seed;
  return c;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

EmbeddingSet random_unit(std::mt19937_64& gen, std::size_t n, std::size_t d) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& x : r) x = z(gen);
  }
  return normalize_rows(EmbeddingSet::from_rows(rows));
}

// Mean Gaussian kernel over ordered pairs (i, j), i != j, of one index list.
long double oracle_within(const EmbeddingSet& e, const std::vector<std::size_t>& idx, double t) {
  long double sum = 0.0L;
  std::size_t count = 0;
  for (auto i : idx) {
    for (auto j : idx) {
      if (i == j) continue;
      long double d2 = 0.0L;
      for (std::size_t k = 0; k < e.cols(); ++k) {
        const long double diff = static_cast<long double>(e.row(i)[k]) - e.row(j)[k];
        d2 += diff * diff;
      }
      sum += std::exp(-static_cast<long double>(t) * d2);
      ++count;
    }
  }
  return sum / static_cast<long double>(count);
}

long double oracle_cross(const EmbeddingSet& e, const std::vector<std::size_t>& a,
                         const std::vector<std::size_t>& b, double t) {
  long double sum = 0.0L;
  for (auto i : a) {
    for (auto j : b) {
      long double d2 = 0.0L;
      for (std::size_t k = 0; k < e.cols(); ++k) {
        const long double diff = static_cast<long double>(e.row(i)[k]) - e.row(j)[k];
        d2 += diff * diff;
      }
      sum += std::exp(-static_cast<long double>(t) * d2);
    }
  }
  return sum / static_cast<long double>(a.size() * b.size());
}

// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
std::vector<std::vector<double>> random_orthogonal(std::mt19937_64& gen, std::size_t d) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> q;
  while (q.size() < d) {
    std::vector<double> v(d);
    for (auto& x : v) x = z(gen);
    for (const auto& u : q) {
      const double dot = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
      for (std::size_t k = 0; k < d; ++k) v[k] -= dot * u[k];
    }
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (auto& x : v) x /= n;
    q.push_back(v);
  }
  return q;
}

}  // namespace

TEST_SUITE("embedding set") {
  TEST_CASE("validation") {
    CHECK_THROWS_AS(EmbeddingSet(0, 3, {}), ValidationError);
    CHECK_THROWS_AS(EmbeddingSet(2, 2, {1, 0, 0}), ValidationError);
    CHECK_THROWS_AS(EmbeddingSet(1, 2, {std::nan(""), 0}), ValidationError);
    CHECK_THROWS_AS(EmbeddingSet(1, 2, {2, 0}, true), ValidationError);
    CHECK_NOTHROW(EmbeddingSet(1, 2, {1, 0}, true));
    CHECK_THROWS_AS(EmbeddingSet::from_rows({{1, 0}, {1}}), ValidationError);
  }

  TEST_CASE("normalize a 3-4-5 row") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{3, 4}}));
    CHECK(e.normalized());
    CHECK(e.row(0)[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(e.row(0)[1] == doctest::Approx(0.8).epsilon(1e-15));
  }

  TEST_CASE("normalization is idempotent on unit rows") {
    const auto e = EmbeddingSet::from_rows({{1, 0, 0}, {0, 0.6, 0.8}});
    const auto n = normalize_rows(e);
    for (std::size_t i = 0; i < e.values().size(); ++i) CHECK(std::abs(n.values()[i] - e.values()[i]) < 1e-12);
  }

  TEST_CASE("random rows end up with unit norm") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-5, 5);
    std::vector<std::vector<double>> rows(10, std::vector<double>(8));
    for (auto& r : rows) {
      for (auto& x : r) x = u(gen);
    }
    const auto e = normalize_rows(EmbeddingSet::from_rows(rows));
    for (std::size_t i = 0; i < 10; ++i) {
      const auto r = e.row(i);
      CHECK(std::abs(std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0)) - 1.0) < 1e-12);
    }
  }

  TEST_CASE("zero rows cannot be normalized") {
    CHECK_THROWS_AS(normalize_rows(EmbeddingSet::from_rows({{1, 0}, {0, 0}})), ValidationError);
  }

  TEST_CASE("partition groups by label") {
    const Partition p({"b", "a", "b", "c"});
    REQUIRE(p.groups().size() == 3);
    CHECK(p.groups()[0].name == "a");
    CHECK(p.groups()[1].indices == std::vector<std::size_t>{0, 2});
    CHECK_THROWS_AS(Partition({}), ValidationError);
  }
}

TEST_SUITE("diversity") {
  TEST_CASE("identical rows have diversity one") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 2}, {1, 2}, {1, 2}}));
    for (double t : {0.5, 5.0, 50.0}) CHECK(diversity(e, iota(3), t, exact()) == 1.0);
  }

  TEST_CASE("antipodal pair") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{0, 1, 0}, {0, -1, 0}}));
    for (double t : kDefaultTemperatures) {
      CHECK(close_rel(diversity(e, iota(2), t, exact()), std::exp(4.0 * t), 1e-9));
    }
  }

  TEST_CASE("orthogonal triple") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
    for (double t : kDefaultTemperatures) {
      CHECK(close_rel(diversity(e, iota(3), t, exact()), std::exp(2.0 * t), 1e-9));
    }
  }

  TEST_CASE("zero temperature gives one") {
    std::mt19937_64 gen(2);
    const auto e = random_unit(gen, 20, 4);
    CHECK(diversity(e, iota(20), 0.0, exact()) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("matches the ordered-pair oracle") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 10; ++trial) {
      const auto e = random_unit(gen, 17 + trial * 7, 5);
      for (double t : {0.5, 2.0, 20.0}) {
        const double want = static_cast<double>(1.0L / oracle_within(e, iota(e.rows()), t));
        CHECK(close_rel(diversity(e, iota(e.rows()), t, exact()), want, 1e-12));
      }
    }
  }

  TEST_CASE("errors") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 0}, {0, 1}}));
    const std::vector<std::size_t> one{0};
    CHECK_THROWS_AS(diversity(e, one, 1.0, exact()), InsufficientDataError);
    CHECK_THROWS_AS(diversity(e, iota(2), -1.0, exact()), ValidationError);
    CHECK_THROWS_AS(diversity(EmbeddingSet::from_rows({{1, 0}, {0, 2}}), iota(2), 1.0, exact()),
                    PreconditionError);
    CHECK_THROWS_AS(diversity(e, iota(2), 1.0, subsample(0, 1)), ValidationError);
    const std::vector<std::size_t> bad{0, 5};
    CHECK_THROWS_AS(diversity(e, bad, 1.0, exact()), ValidationError);
  }
}

TEST_SUITE("disparity") {
  TEST_CASE("orthogonal singletons") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 0}, {0, 1}}));
    const Partition p({"a", "b"});
    for (double t : kDefaultTemperatures) CHECK(close_rel(disparity(e, p, t, exact()), std::exp(2.0 * t), 1e-9));
  }

  TEST_CASE("coincident singletons") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 1}, {1, 1}}));
    CHECK(disparity(e, Partition({"a", "b"}), 3.0, exact()) == 1.0);
  }

  TEST_CASE("three orthogonal singletons") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
    const Partition p({"a", "b", "c"});
    for (double t : kDefaultTemperatures) CHECK(close_rel(disparity(e, p, t, exact()), std::exp(2.0 * t), 1e-9));
  }

  TEST_CASE("matches the ordered group-pair oracle") {
    std::mt19937_64 gen(4);
    const auto e = random_unit(gen, 60, 6);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < 60; ++i) labels.push_back(i % 3 == 0 ? "x" : (i % 3 == 1 ? "y" : "z"));
    const Partition p(labels);
    for (double t : {0.5, 5.0}) {
      long double total = 0.0L;
      for (const auto& a : p.groups()) {
        for (const auto& b : p.groups()) {
          if (a.name != b.name) total += oracle_cross(e, a.indices, b.indices, t);
        }
      }
      const double want = static_cast<double>(6.0L / total);
      CHECK(close_rel(disparity(e, p, t, exact()), want, 1e-12));
    }
  }

  TEST_CASE("needs two groups") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 0}, {0, 1}}));
    CHECK_THROWS_AS(disparity(e, Partition::single(2), 1.0, exact()), InsufficientDataError);
    CHECK_THROWS_AS(disparity(e, Partition({"a", "b", "c"}), 1.0, exact()), ValidationError);
  }
}

TEST_SUITE("fragmentation ratio and sweeps") {
  TEST_CASE("identical points everywhere give ratio one") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 0}, {1, 0}, {1, 0}, {1, 0}}));
    const auto r = temperature_sweep(e, Partition({"a", "a", "b", "b"}), kDefaultTemperatures, exact());
    for (std::size_t k = 0; k < r.temperatures.size(); ++k) CHECK(*r.ratio[k] == 1.0);
    CHECK(r.warnings.empty());
  }

  TEST_CASE("orthogonal singletons give e^{2t} with a warning per group") {
    const auto e = normalize_rows(EmbeddingSet::from_rows({{1, 0, 0}, {0, 1, 0}}));
    const auto r = temperature_sweep(e, Partition({"a", "b"}), kDefaultTemperatures, exact());
    CHECK(r.warnings.size() == 2);
    for (std::size_t k = 0; k < r.temperatures.size(); ++k) {
      CHECK(r.diversity[0][k] == 1.0);
      CHECK(close_rel(*r.ratio[k], std::exp(2.0 * r.temperatures[k]), 1e-9));
    }
  }

  TEST_CASE("aggregation options") {
    const std::vector<double> d{1.0, 4.0};
    CHECK(aggregate_diversity(d, Aggregation::kMean) == 2.5);
    CHECK(aggregate_diversity(d, Aggregation::kGeometric) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(fragmentation_ratio(5.0, d) == 2.0);
    CHECK(fragmentation_ratio(4.0, d, Aggregation::kGeometric) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(aggregate_diversity({}, Aggregation::kMean), ValidationError);
  }

  TEST_CASE("single temperature equals direct calls") {
    std::mt19937_64 gen(5);
    const auto e = random_unit(gen, 40, 3);
    std::vector<std::string> labels(40, "p");
    for (std::size_t i = 25; i < 40; ++i) labels[i] = "q";
    const Partition p(labels);
    const double t[] = {2.0};
    const auto r = temperature_sweep(e, p, t, exact());
    CHECK(r.diversity[0][0] == diversity(e, p.groups()[0].indices, 2.0, exact()));
    CHECK(r.diversity[1][0] == diversity(e, p.groups()[1].indices, 2.0, exact()));
    CHECK(*r.disparity[0] == disparity(e, p, 2.0, exact()));
  }

  TEST_CASE("one group omits disparity") {
    std::mt19937_64 gen(6);
    const auto e = random_unit(gen, 10, 3);
    const auto r = temperature_sweep(e, Partition::single(10), kDefaultTemperatures, exact());
    CHECK_FALSE(r.disparity[0].has_value());
    CHECK_FALSE(r.ratio[0].has_value());
    CHECK(r.warnings.size() == 1);
  }
}

TEST_SUITE("metric properties") {
  TEST_CASE("diversity is at least one and non-decreasing in temperature") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
      const auto e = random_unit(gen, 5 + static_cast<std::size_t>(trial) * 3, 2 + trial % 5);
      for (auto mode : {0, 1}) {
        const auto cfg = mode == 0 ? exact() : subsample(500, static_cast<std::uint64_t>(trial));
        const auto r = temperature_sweep(e, Partition::single(e.rows()), kDefaultTemperatures, cfg);
        for (std::size_t k = 0; k < r.temperatures.size(); ++k) {
          CHECK(r.diversity[0][k] >= 1.0);
          if (k > 0) CHECK(r.diversity[0][k] >= r.diversity[0][k - 1]);
        }
      }
    }
  }

  TEST_CASE("orthogonal transforms preserve the metrics") {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t d = 4;
      const auto e = random_unit(gen, 30, d);
      const auto q = random_orthogonal(gen, d);
      std::vector<std::vector<double>> rotated(30, std::vector<double>(d, 0.0));
      for (std::size_t i = 0; i < 30; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
          for (std::size_t b = 0; b < d; ++b) rotated[i][a] += q[a][b] * e.row(i)[b];
        }
      }
      const auto f = normalize_rows(EmbeddingSet::from_rows(rotated));
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < 30; ++i) labels.push_back(i < 12 ? "g0" : "g1");
      const Partition p(labels);
      const auto a = temperature_sweep(e, p, kDefaultTemperatures, exact());
      const auto b = temperature_sweep(f, p, kDefaultTemperatures, exact());
      for (std::size_t k = 0; k < a.temperatures.size(); ++k) {
        CHECK(close_rel(a.diversity[0][k], b.diversity[0][k], 1e-9));
        CHECK(close_rel(*a.disparity[k], *b.disparity[k], 1e-9));
      }
    }
  }

  TEST_CASE("row permutation leaves exact results bit-identical") {
    std::mt19937_64 gen(9);
    const auto e = random_unit(gen, 80, 5);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < 80; ++i) labels.push_back("s" + std::to_string(i % 4));
    std::vector<std::size_t> perm = iota(80);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> plabels;
    for (auto i : perm) {
      rows.emplace_back(e.row(i).begin(), e.row(i).end());
      plabels.push_back(labels[i]);
    }
    const EmbeddingSet pe(80, 5,
                          [&] {
                            std::vector<double> v;
                            for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
                            return v;
                          }(),
                          true);
    const auto a = temperature_sweep(e, Partition(labels), kDefaultTemperatures, exact());
    const auto b = temperature_sweep(pe, Partition(plabels), kDefaultTemperatures, exact());
    CHECK(a.diversity == b.diversity);
    CHECK(a.disparity == b.disparity);
    CHECK(a.ratio == b.ratio);
  }

  TEST_CASE("results do not depend on the worker count") {
    std::mt19937_64 gen(10);
    const auto e = random_unit(gen, 150, 8);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < 150; ++i) labels.push_back(i < 70 ? "a" : "b");
    const Partition p(labels);
    std::vector<MetricReport> runs;
    for (unsigned threads : {1u, 3u, 8u}) {
      set_thread_count(threads);
      runs.push_back(temperature_sweep(e, p, kDefaultTemperatures, exact()));
      runs.push_back(temperature_sweep(e, p, kDefaultTemperatures, subsample(9000, 4)));
    }
    set_thread_count(0);
    for (std::size_t r = 2; r < runs.size(); ++r) {
      CHECK(runs[r].diversity == runs[r % 2].diversity);
      CHECK(runs[r].disparity == runs[r % 2].disparity);
    }
  }

  TEST_CASE("subsample estimates track exact values") {
    std::mt19937_64 gen(11);
    const auto e = random_unit(gen, 100, 3);
    const auto idx = iota(100);
    const double t[] = {1.0};
    const double want = diversity_kernel_means(e, idx, t, exact()).front();
    const double got = diversity_kernel_means(e, idx, t, subsample(200 * 100, 1)).front();
    CHECK(close_rel(got, want, 0.01));
  }

  TEST_CASE("pairwise distances are symmetric with a zero diagonal") {
    std::mt19937_64 gen(12);
    const auto e = random_unit(gen, 12, 3);
    const auto d = pairwise_sq_distances(e);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(d[i * 12 + i] == 0.0);
      for (std::size_t j = 0; j < 12; ++j) {
        CHECK(d[i * 12 + j] == d[j * 12 + i]);
        CHECK(d[i * 12 + j] <= 4.0 + 1e-12);
      }
    }
  }
}
