#pragma once

// Test-only reference computations. They walk the tree top-down from the raw
// node array and never call annotate(), so they check it independently.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "cheatflip/game_tree.hpp"

namespace oracle {

/// Leaves reached by honest play with their reach probability 2^-D and
/// honest value (1 for label 0).
inline std::vector<std::pair<double, double>> weighted_leaves(const cheatflip::GameTree& t) {
  std::vector<std::pair<double, double>> out;
  auto walk = [&](auto&& self, std::size_t i, double reach) -> void {
    const auto& nd = t.node(i);
    if (nd.is_leaf()) {
      out.emplace_back(reach, nd.label == 0 ? 1.0 : 0.0);
      return;
    }
    self(self, nd.up, reach / 2);
    self(self, nd.down, reach / 2);
  };
  walk(walk, 0, 1.0);
  return out;
}

/// sum_y 2^-D(y) P_W(y)
inline double leaf_sum(const cheatflip::GameTree& t) {
  double s = 0.0;
  for (auto [r, v] : weighted_leaves(t)) s += r * v;
  return s;
}

/// 4 sum_y 2^-D(y) P_W(y)^2 - 4 (sum_y 2^-D(y) P_W(y))^2
inline double lemma_polynomial(const cheatflip::GameTree& t) {
  double lin = 0.0, sq = 0.0;
  for (auto [r, v] : weighted_leaves(t)) {
    lin += r * v;
    sq += r * v * v;
  }
  return 4.0 * sq - 4.0 * lin * lin;
}

/// Fraction of honest n-flip games won by outcome 0 on majority.
inline double honest_majority_mc(int n, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int wins = 0;
  for (int i = 0; i < trials; ++i) {
    int zeros = 0;
    for (int k = 0; k < n; ++k) zeros += static_cast<int>(rng() >> 63);
    wins += 2 * zeros > n ? 1 : 0;
  }
  return static_cast<double>(wins) / trials;
}

}  // namespace oracle
