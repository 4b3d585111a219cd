#pragma once

// Brute-force reference implementations used only by the tests. They share no
// code with the library: maps instead of index tables, natural logs converted
// at the end, plain loops over every cell.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fragscope/factor_model.hpp"

namespace oracle {

using Dist = std::map<std::string, double>;
using Component = std::pair<Dist, Dist>;

inline Dist to_map(const fragscope::factor::DiscreteDistribution& d) {
  Dist out;
  for (std::size_t i = 0; i < d.size(); ++i) out[d.support()[i]] += d.mass()[i];
  return out;
}

inline std::vector<Component> components(const fragscope::factor::MixtureModel& mix) {
  std::vector<Component> out;
  for (const auto& c : mix.components()) out.emplace_back(to_map(c.u), to_map(c.v));
  return out;
}

inline double entropy_bits(const Dist& d) {
  double h = 0.0;
  for (const auto& [s, p] : d) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(2.0);
}

struct Info {
  double mi = 0.0;
  double hu = 0.0;
  double hv = 0.0;
  double nmi = 0.0;
};

inline Info information(const std::vector<Component>& comps) {
  const double w = 1.0 / static_cast<double>(comps.size());
  std::map<std::pair<std::string, std::string>, double> joint;
  Dist pu;
  Dist pv;
  for (const auto& [u, v] : comps) {
    for (const auto& [a, pa] : u) {
      for (const auto& [b, pb] : v) joint[{a, b}] += w * pa * pb;
    }
  }
  for (const auto& [ab, p] : joint) {
    pu[ab.first] += p;
    pv[ab.second] += p;
  }
  Info r;
  for (const auto& [ab, p] : joint) {
    if (p > 0.0) r.mi += p * std::log(p / (pu[ab.first] * pv[ab.second]));
  }
  r.mi /= std::log(2.0);
  r.hu = entropy_bits(pu);
  r.hv = entropy_bits(pv);
  r.nmi = (r.hu + r.hv) > 0.0 ? 2.0 * r.mi / (r.hu + r.hv) : 0.0;
  return r;
}

inline Info information(const fragscope::factor::MixtureModel& mix) {
  return information(components(mix));
}

// Random distribution over the symbols prefix+[lo, hi), with at least one
// symbol and exponential-shaped masses.
inline fragscope::factor::DiscreteDistribution random_dist(std::mt19937_64& gen,
                                                           const std::string& prefix, int lo,
                                                           int hi, int max_size) {
  std::vector<int> pool;
  for (int s = lo; s < hi; ++s) pool.push_back(s);
  std::shuffle(pool.begin(), pool.end(), gen);
  std::uniform_int_distribution<int> size_dist(1, std::min<int>(max_size, static_cast<int>(pool.size())));
  const int n = size_dist(gen);
  std::exponential_distribution<double> e(1.0);
  std::vector<std::string> support;
  std::vector<double> mass;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    support.push_back(prefix + std::to_string(pool[static_cast<std::size_t>(i)]));
    mass.push_back(e(gen) + 1e-3);
    total += mass.back();
  }
  for (double& m : mass) m /= total;
  return {std::move(support), std::move(mass)};
}

}  // namespace oracle
