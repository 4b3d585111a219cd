#include <cmath>
#include <random>

#include "doctest.h"
#include "fragscope/bridge_planner.hpp"
#include "fragscope/errors.hpp"
#include "oracles.hpp"

using namespace fragscope;
using namespace fragscope::bridge;
using factor::DiscreteDistribution;

namespace {

DiscreteDistribution point(const char* s) { return DiscreteDistribution::point(s); }
DiscreteDistribution uni(std::vector<std::string> s) { return DiscreteDistribution::uniform(std::move(s)); }

MixtureModel pair_mix(DiscreteDistribution u1, DiscreteDistribution v1, DiscreteDistribution u2,
                      DiscreteDistribution v2) {
  return MixtureModel({{std::move(u1), std::move(v1)}, {std::move(u2), std::move(v2)}});
}

MixtureModel point_pair() { return pair_mix(point("a"), point("x"), point("b"), point("y")); }

BridgeSpec spec(Factor f, std::vector<std::string> symbols, double eps = 0.0) {
  return BridgeSpec{f, std::move(symbols), eps};
}

MixtureModel random_pair(std::mt19937_64& gen) {
  return pair_mix(oracle::random_dist(gen, "u", 0, 8, 5), oracle::random_dist(gen, "v", 0, 8, 5),
                  oracle::random_dist(gen, "u", 4, 12, 5), oracle::random_dist(gen, "v", 4, 12, 5));
}

std::vector<double> default_grid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

}  // namespace

TEST_SUITE("apply_bridge") {
  TEST_CASE("vanishing epsilon is continuous") {
    const auto mix = point_pair();
    const auto after = apply_bridge(mix, spec(Factor::kU, {"bridge"}, 1e-6));
    CHECK(std::abs(factor::normalized_mi(after).value - factor::normalized_mi(mix).value) < 1e-3);
  }

  TEST_CASE("shared symbol at one half") {
    const auto after = apply_bridge(point_pair(), spec(Factor::kU, {"bridge"}, 0.5));
    CHECK(after[0].u.mass_of("a") == 0.5);
    CHECK(after[1].u.mass_of("bridge") == 0.5);
    const double nmi = factor::normalized_mi(after).value;
    CHECK(nmi == doctest::Approx(oracle::information(after).nmi).epsilon(1e-14));
    CHECK(nmi == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(nmi < 1.0);
  }

  TEST_CASE("heavy bridges on both factors nearly decouple them") {
    auto after = apply_bridge(point_pair(), spec(Factor::kU, {"bu"}, 0.99));
    after = apply_bridge(after, spec(Factor::kV, {"bv"}, 0.99));
    const double nmi = factor::normalized_mi(after).value;
    CHECK(nmi == doctest::Approx(oracle::information(after).nmi).epsilon(1e-12));
    CHECK(nmi < 1e-2);
  }

  TEST_CASE("an existing symbol absorbs its share") {
    const auto after = apply_bridge(pair_mix(uni({"a", "b"}), point("x"), point("c"), point("y")),
                                    spec(Factor::kU, {"b", "new"}, 0.2));
    CHECK(after[0].u.mass_of("b") == doctest::Approx(0.4 + 0.1).epsilon(1e-15));
    CHECK(after[0].u.mass_of("new") == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(after[1].u.mass_of("c") == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(after[0].v == point("x"));
  }

  TEST_CASE("errors") {
    const auto mix = point_pair();
    CHECK_THROWS_AS(apply_bridge(mix, spec(Factor::kU, {"s"}, 0.0)), ValidationError);
    CHECK_THROWS_AS(apply_bridge(mix, spec(Factor::kU, {"s"}, 1.0)), ValidationError);
    CHECK_THROWS_AS(apply_bridge(mix, spec(Factor::kU, {}, 0.5)), ValidationError);
    CHECK_THROWS_AS(apply_bridge(mix, spec(Factor::kU, {"s", "s"}, 0.5)), ValidationError);
  }
}

TEST_SUITE("symmetrize_factor") {
  TEST_CASE("pooling v removes all dependence") {
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 50; ++trial) {
      const auto mix = random_pair(gen);
      CHECK(factor::mutual_information(factor::joint_mixture(symmetrize_factor(mix, Factor::kV))) < 1e-12);
      CHECK(factor::mutual_information(factor::joint_mixture(symmetrize_factor(mix, Factor::kU))) < 1e-12);
    }
  }

  TEST_CASE("identical factors are left alone") {
    const auto v = DiscreteDistribution({"x", "y"}, {0.3, 0.7});
    const auto mix = pair_mix(point("a"), v, point("b"), v);
    CHECK(symmetrize_factor(mix, Factor::kV) == mix);
  }

  TEST_CASE("pooling u on disjoint uniforms") {
    const auto mix = pair_mix(uni({"a", "b"}), uni({"x", "y"}), uni({"c", "d"}), uni({"w", "z"}));
    const auto after = symmetrize_factor(mix, Factor::kU);
    CHECK(oracle::information(after).nmi < 1e-12);
    CHECK(factor::normalized_mi(after).value < 1e-12);
  }

  TEST_CASE("idempotent") {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 20; ++trial) {
      const auto once = symmetrize_factor(random_pair(gen), Factor::kV);
      const auto twice = symmetrize_factor(once, Factor::kV);
      for (std::size_t i = 0; i < once[0].v.size(); ++i) {
        CHECK(std::abs(twice[0].v.mass_of(once[0].v.support()[i]) - once[0].v.mass()[i]) < 1e-15);
      }
    }
  }
}

TEST_SUITE("plan_bridge") {
  TEST_CASE("a vacuous target is met at the first grid point") {
    const auto plan = plan_bridge(point_pair(), spec(Factor::kV, {"bridge"}), 1.0 - 1e-9, default_grid());
    REQUIRE(plan.feasible());
    CHECK(*plan.epsilon_star == 0.1);
  }

  TEST_CASE("point masses at target one half match the oracle scan") {
    const auto mix = point_pair();
    const auto plan = plan_bridge(mix, spec(Factor::kV, {"bridge"}), 0.5, default_grid());
    std::optional<double> want;
    for (double eps : default_grid()) {
      const double nmi = oracle::information(apply_bridge(mix, spec(Factor::kV, {"bridge"}, eps))).nmi;
      if (nmi <= 0.5) {
        want = eps;
        break;
      }
    }
    REQUIRE(want.has_value());
    REQUIRE(plan.feasible());
    CHECK(*plan.epsilon_star == *want);
    CHECK(plan.achieved_nmi <= 0.5);
    CHECK(plan.baseline_nmi == 1.0);
    CHECK(plan.monotone);
    REQUIRE(plan.bound_after.has_value());
  }

  TEST_CASE("target zero is infeasible for partial bridges") {
    const auto plan = plan_bridge(point_pair(), spec(Factor::kV, {"bridge"}), 0.0, default_grid());
    CHECK_FALSE(plan.feasible());
    for (const auto& g : plan.grid) CHECK(g.nmi > 0.0);
    CHECK(plan.achieved_nmi == plan.grid.back().nmi);
  }

  TEST_CASE("errors") {
    const auto mix = point_pair();
    CHECK_THROWS_AS(plan_bridge(mix, spec(Factor::kV, {"b"}), 0.5, {}), ValidationError);
    CHECK_THROWS_AS(plan_bridge(mix, spec(Factor::kV, {"b"}), 1.0, {0.5}), ValidationError);
    CHECK_THROWS_AS(plan_bridge(mix, spec(Factor::kV, {"b"}), 0.5, {0.5, 0.2}), ValidationError);
    CHECK_THROWS_AS(plan_bridge(mix, spec(Factor::kV, {"b"}), 0.5, {0.5, 1.0}), ValidationError);
  }
}

TEST_SUITE("bridge properties") {
  TEST_CASE("bridged distributions stay normalized") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> eps(1e-6, 1.0 - 1e-6);
    for (int trial = 0; trial < 200; ++trial) {
      const auto after = apply_bridge(random_pair(gen), spec(trial % 2 ? Factor::kU : Factor::kV, {"b1", "u2"}, eps(gen)));
      for (const auto& c : after.components()) {
        for (const auto* d : {&c.u, &c.v}) {
          double total = 0.0;
          for (double p : d->mass()) {
            CHECK(p >= 0.0);
            total += p;
          }
          CHECK(std::abs(total - 1.0) < 1e-12);
        }
      }
    }
  }

  TEST_CASE("a shared bridge lowers NMI at every grid epsilon") {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 50; ++trial) {
      const auto mix = random_pair(gen);
      const double base = factor::normalized_mi(mix).value;
      for (double e : default_grid()) {
        for (auto f : {Factor::kU, Factor::kV}) {
          CHECK(factor::normalized_mi(apply_bridge(mix, spec(f, {"shared"}, e))).value < base);
        }
      }
    }
  }

  TEST_CASE("a shared bridge never lowers interleaving") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 100; ++trial) {
      const auto mix = random_pair(gen);
      for (double e : default_grid()) {
        const auto after = apply_bridge(mix, spec(Factor::kV, {"shared"}, e));
        CHECK(factor::c_interleave(after) >= factor::c_interleave(mix) - 1e-12);
      }
    }
  }

  TEST_CASE("the bound does not rise when the bridge keeps diversity") {
    // Bridged entropy is h(eps) + (1 - eps) H(p); when that does not fall, the
    // bound is non-increasing because interleaving only grows.
    std::mt19937_64 gen(6);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto mix = random_pair(gen);
      for (double e : default_grid()) {
        const auto after = apply_bridge(mix, spec(Factor::kU, {"shared"}, e));
        if (factor::c_diversity(after) < factor::c_diversity(mix)) continue;
        ++checked;
        CHECK(factor::prop2_nmi_upper_bound(after) <= factor::prop2_nmi_upper_bound(mix) + 1e-12);
      }
    }
    CHECK(checked > 100);
  }

  TEST_CASE("grid refinement brackets the optimum") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
      const auto mix = random_pair(gen);
      const double target = 0.5 * factor::normalized_mi(mix).value;
      const auto coarse = plan_bridge(mix, spec(Factor::kV, {"shared"}), target, default_grid());
      if (!coarse.feasible()) continue;
      std::vector<double> fine;
      for (int i = 1; i < 100; ++i) fine.push_back(i / 100.0);
      const auto refined = plan_bridge(mix, spec(Factor::kV, {"shared"}), target, fine);
      REQUIRE(refined.feasible());
      CHECK(*refined.epsilon_star <= *coarse.epsilon_star);
      CHECK(*refined.epsilon_star > *coarse.epsilon_star - 0.1 - 1e-12);
      CHECK(refined.monotone);
    }
  }
}
