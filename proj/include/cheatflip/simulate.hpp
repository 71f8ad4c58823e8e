#pragma once

// Monte Carlo estimates for tree and walk games.
//
// Trial i of a run with seed s draws from SplitMix64(trial_seed(s, i)) (see
// rng.hpp), so a report depends only on (inputs, seed, trials) and never on
// how many workers share the trials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cheatflip/composer.hpp"
#include "cheatflip/game_tree.hpp"
#include "cheatflip/rng.hpp"
#include "cheatflip/walk.hpp"

namespace cheatflip {

struct SimCounts {
  std::uint64_t wins = 0;
  std::uint64_t losses = 0;
  std::uint64_t catches = 0;
  std::uint64_t overruns = 0;
  std::uint64_t continued = 0;  // walk trials that switched to the fair coin

  SimCounts& operator+=(const SimCounts& o) {
    wins += o.wins;
    losses += o.losses;
    catches += o.catches;
    overruns += o.overruns;
    continued += o.continued;
    return *this;
  }
  friend bool operator==(const SimCounts&, const SimCounts&) = default;
};

struct SimReport {
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  SimCounts counts;

  [[nodiscard]] double estimate(std::uint64_t k) const {
    return static_cast<double>(k) / static_cast<double>(trials);
  }
  [[nodiscard]] double win() const { return estimate(counts.wins); }
  [[nodiscard]] double loss() const { return estimate(counts.losses); }
  [[nodiscard]] double caught() const { return estimate(counts.catches); }

  /// sqrt(p(1-p)/trials) at the empirical p.
  [[nodiscard]] double stderr_of(double p) const {
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

/// |estimate - exact| <= 4 standard errors. The standard error is the larger
/// of the empirical and the exact-probability one, so a degenerate empirical
/// estimate (p-hat 0 or 1 on few trials) cannot shrink the window to zero.
inline bool within_4_stderr(const SimReport& r, double estimate, double exact) {
  const double se = std::max(r.stderr_of(estimate), r.stderr_of(exact));
  return std::abs(estimate - exact) <= 4.0 * se;
}

namespace detail {

/// Runs `trial(i, counts)` for i in [0, trials) on `workers` threads, each
/// owning a contiguous block; counts are summed at the end.
template <class Trial>
SimCounts run_trials(std::uint64_t trials, unsigned workers, const Trial& trial) {
  workers = std::max(1u, workers);
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, trials));
  std::vector<SimCounts> partial(workers);
  auto block = [&](unsigned w) {
    const std::uint64_t lo = trials * w / workers;
    const std::uint64_t hi = trials * (w + 1) / workers;
    for (std::uint64_t i = lo; i < hi; ++i) trial(i, partial[w]);
  };
  if (workers == 1) {
    block(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(block, w);
  }
  SimCounts total;
  for (const auto& p : partial) total += p;
  return total;
}

}  // namespace detail

inline unsigned default_workers() {
  return std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
}

/// Plays the tree game `trials` times; a catch ends the trial.
inline SimReport simulate_tree(const GameTree& t, const CheatModel& m, const Strategy& s,
                               std::uint64_t trials, std::uint64_t seed,
                               unsigned workers = default_workers()) {
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (s.eps.size() != t.size()) throw DomainError("strategy does not match the tree");
  const auto nodes = t.nodes();
  std::vector<OutcomeTriple> tr(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].is_leaf()) tr[i] = triple(m, s.eps[i]);
  }
  auto trial = [&](std::uint64_t i, SimCounts& c) {
    SplitMix64 rng(trial_seed(seed, i));
    std::size_t x = 0;
    while (!nodes[x].is_leaf()) {
      const double u = rng.uniform();
      if (u < tr[x].pc) {
        ++c.catches;
        return;
      }
      x = u < tr[x].pc + tr[x].p0 ? nodes[x].up : nodes[x].down;
    }
    if (nodes[x].label == 0) {
      ++c.wins;
    } else {
      ++c.losses;
    }
  };
  return SimReport{trials, seed, detail::run_trials(trials, workers, trial)};
}

/// Plays the walk from z = 0. After a catch the walk continues with a fair
/// coin; a trial that reaches `step_cap` draws its outcome with probability
/// (N+z)/(2N) and is counted in `overruns`.
inline SimReport simulate_walk(const WalkGame& g, const WalkPolicy& pol, std::uint64_t trials,
                               std::uint64_t seed, std::uint64_t step_cap,
                               unsigned workers = default_workers()) {
  if (trials < 1) throw DomainError("trials must be >= 1");
  const int n = g.n();
  if (step_cap < 4ull * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n)) {
    throw DomainError("step_cap must be at least 4 N^2");
  }
  if (pol.n != n || pol.eps.size() != static_cast<std::size_t>(g.interior_count())) {
    throw DomainError("policy does not match the walk");
  }
  std::vector<OutcomeTriple> tr(pol.eps.size());
  for (std::size_t i = 0; i < tr.size(); ++i) tr[i] = triple(g.model(), pol.eps[i]);

  auto trial = [&](std::uint64_t i, SimCounts& c) {
    SplitMix64 rng(trial_seed(seed, i));
    int z = 0;
    bool fair = false;
    std::uint64_t steps = 0;
    while (z > -n && z < n) {
      if (steps == step_cap) {
        ++c.overruns;
        if (rng.uniform() < g.honest_value(z)) {
          ++c.wins;
        } else {
          ++c.losses;
        }
        return;
      }
      ++steps;
      const double u = rng.uniform();
      if (fair) {
        z += u < 0.5 ? 1 : -1;
        continue;
      }
      const auto& t = tr[static_cast<std::size_t>(z + n - 1)];
      if (u < t.pc) {
        fair = true;
        ++c.continued;
      } else {
        z += u < t.pc + t.p0 ? 1 : -1;
      }
    }
    if (z == n) {
      ++c.wins;
    } else {
      ++c.losses;
    }
  };
  return SimReport{trials, seed, detail::run_trials(trials, workers, trial)};
}

inline nlohmann::json to_json(const SimReport& r) {
  const double w = r.win(), l = r.loss(), c = r.caught();
  return {{"trials", r.trials},
          {"seed", r.seed},
          {"wins", r.counts.wins},
          {"losses", r.counts.losses},
          {"catches", r.counts.catches},
          {"overruns", r.counts.overruns},
          {"continued", r.counts.continued},
          {"estimates", {{"win", w}, {"loss", l}, {"catch", c}}},
          {"stderr", {{"win", r.stderr_of(w)}, {"loss", r.stderr_of(l)}, {"catch", r.stderr_of(c)}}}};
}

}  // namespace cheatflip
