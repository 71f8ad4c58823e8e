#pragma once

// Adversary analysis of games built on a cheat-sensitive coin.
//
// To leading order in the biases, a strategy eps(x) on the flips of a fair
// tree wins with probability 1/2 + sum_x 2^-D(x) Delta(x) eps(x) and is caught
// with probability sum_x a 2^-D(x) |eps(x)|^b. Minimizing the catch
// probability at fixed total bias eps_tot (b > 1) gives
//
//   eps(x) = eps_tot sgn(Delta) |Delta|^(1/(b-1)) / S,
//   S      = sum_x 2^-D(x) |Delta(x)|^(b/(b-1)),
//   P_C    = a S^(1-b) |eps_tot|^b = a_new |eps_tot|^b.
//
// At b = 2 the sum S is the lemma sum, which is 1 on every fair tree, so
// a_new = a and eps(x) = eps_tot Delta(x).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cheatflip/cheat_model.hpp"
#include "cheatflip/error.hpp"
#include "cheatflip/game_tree.hpp"

namespace cheatflip {

/// Per-node bias, indexed like the tree's nodes. Leaf entries are unused.
struct Strategy {
  std::vector<double> eps;

  [[nodiscard]] double operator[](std::size_t i) const { return eps.at(i); }

  static Strategy honest(const GameTree& t) { return Strategy{std::vector<double>(t.size(), 0.0)}; }
};

/// {path: eps} over internal nodes.
inline nlohmann::json strategy_to_json(const TreeAnnotation& ann, const Strategy& s) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < ann.size(); ++i) {
    if (ann[i].internal) j[ann[i].path] = s[i];
  }
  return j;
}

inline Strategy strategy_from_json(const TreeAnnotation& ann, const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("strategy must be a JSON object {path: eps}");
  Strategy s{std::vector<double>(ann.size(), 0.0)};
  for (const auto& [path, value] : j.items()) {
    if (!ann.contains(path) || !ann.at(path).internal) {
      throw ParseError("strategy names '" + path + "', which is not a flip node of the tree");
    }
    if (!value.is_number()) throw ParseError("strategy entry '" + path + "' is not a number");
    s.eps[ann.index_of(path)] = value.get<double>();
  }
  for (const auto& n : ann.nodes()) {
    if (n.internal && !j.contains(n.path)) {
      throw ParseError("strategy is missing an entry for node '" + n.path + "'");
    }
  }
  return s;
}

struct CompositionResult {
  double a = 0.0;
  double b = 0.0;
  double a_new = 0.0;
  double lambda = 0.0;
  double eps_tot = 0.0;
  double predicted_pc = 0.0;
  bool clipped = false;
  Strategy strategy;
};

namespace detail {

inline TreeAnnotation annotate_for_composition(const GameTree& t, double b) {
  if (!(b > 1.0)) {
    throw DomainError(
        "leading-order composition needs b > 1 (the exponent 1/(b-1) is singular at b = 1); "
        "use the walk solver for linear cheat detection");
  }
  if (t.internal_count() == 0) throw DomainError("tree has no coin flips");
  auto ann = annotate(t);
  if (!is_fair(ann)) {
    throw DomainError("tree is not fair: honest P_W(root) = " + std::to_string(ann.root().p_w));
  }
  return ann;
}

/// sum_x 2^-D(x) |Delta(x)|^(b/(b-1))
inline double influence_sum(const TreeAnnotation& ann, double b) {
  const double q = b / (b - 1.0);
  double s = 0.0;
  for (const auto& n : ann.nodes()) {
    if (n.internal && n.delta != 0.0) s += n.reach * std::pow(std::abs(n.delta), q);
  }
  return s;
}

}  // namespace detail

/// Closed-form composed coefficient a S^(1-b) for a fair tree.
inline double a_new_of_b(const GameTree& t, double a, double b) {
  if (!(a > 0.0)) throw DomainError("a must be positive");
  const auto ann = detail::annotate_for_composition(t, b);
  const double s = detail::influence_sum(ann, b);
  if (s == 0.0) throw DomainError("no flip influences the outcome (Delta is zero everywhere)");
  return a * std::pow(s, 1.0 - b);
}

/// Optimal leading-order strategy for total bias eps_tot.
inline CompositionResult leading_order(const GameTree& t, double a, double b, double eps_tot) {
  if (!(a > 0.0)) throw DomainError("a must be positive");
  if (!(std::abs(eps_tot) <= 0.5)) throw DomainError("|eps_tot| must be <= 1/2");
  const auto ann = detail::annotate_for_composition(t, b);
  const double s = detail::influence_sum(ann, b);
  if (s == 0.0) throw DomainError("no flip influences the outcome (Delta is zero everywhere)");

  CompositionResult r;
  r.a = a;
  r.b = b;
  r.eps_tot = eps_tot;
  r.a_new = a * std::pow(s, 1.0 - b);
  r.predicted_pc = r.a_new * std::pow(std::abs(eps_tot), b);
  const double sign_tot = eps_tot > 0.0 ? 1.0 : (eps_tot < 0.0 ? -1.0 : 0.0);
  // Multiplier in eps = sgn(lambda Delta) |lambda Delta / (a b)|^(1/(b-1)).
  r.lambda = sign_tot * a * b * std::pow(std::abs(eps_tot) / s, b - 1.0);

  r.strategy.eps.assign(t.size(), 0.0);
  const double p = 1.0 / (b - 1.0);
  for (std::size_t i = 0; i < ann.size(); ++i) {
    const auto& n = ann[i];
    if (!n.internal || n.delta == 0.0) continue;
    const double sgn = n.delta > 0.0 ? 1.0 : -1.0;
    double e = eps_tot * sgn * std::pow(std::abs(n.delta), p) / s;
    if (std::abs(e) > 0.5) {
      e = std::copysign(0.5, e);
      r.clipped = true;
    }
    r.strategy.eps[i] = e;
  }
  return r;
}

/// Central difference of a_new in b.
inline double derivative_in_b(const GameTree& t, double a, double b, double h) {
  if (!(h > 0.0 && h <= 0.1)) throw DomainError("step h must lie in (0, 0.1]");
  if (!(b - h > 1.0)) throw DomainError("need b - h > 1");
  return (a_new_of_b(t, a, b + h) - a_new_of_b(t, a, b - h)) / (2.0 * h);
}

/// Exact probabilities of (game outcome 0, game outcome 1, caught) when the
/// cheater plays `s`. A catch at any flip ends the game.
inline OutcomeTriple exact_outcome(const GameTree& t, const CheatModel& m, const Strategy& s) {
  if (s.eps.size() != t.size()) throw DomainError("strategy does not match the tree");
  const auto nodes = t.nodes();
  std::vector<OutcomeTriple> v(nodes.size());
  for (std::size_t k = nodes.size(); k-- > 0;) {
    const auto& nd = nodes[k];
    if (nd.is_leaf()) {
      const double w = leaf_win(nd.label);
      v[k] = {w, 1.0 - w, 0.0};
      continue;
    }
    const auto tr = triple(m, s.eps[k]);
    const auto& u = v[nd.up];
    const auto& d = v[nd.down];
    v[k] = {tr.p0 * u.p0 + tr.p1 * d.p0, tr.p0 * u.p1 + tr.p1 * d.p1,
            tr.pc + tr.p0 * u.pc + tr.p1 * d.pc};
  }
  return v[0];
}

// ---------------------------------------------------------------------------
// Grid-search oracle
// ---------------------------------------------------------------------------

struct BruteForceResult {
  Strategy strategy;
  double min_pc = 0.0;
  double win = 0.0;  // exact probability of outcome 0 under `strategy`
};

inline constexpr std::size_t kBruteForceMaxFlips = 5;

namespace detail {

// One achievable (win, catch) pair of a subtree, with the grid choices that
// produce it. `up`/`down` index the children's frontiers.
struct FrontPoint {
  double w;
  double c;
  std::int32_t j;
  std::uint32_t up;
  std::uint32_t down;
};

// Pareto frontier of a subtree: sorted by c ascending with w strictly
// ascending. `lex_rank[p]` orders points by their subtree strategy vector
// (preorder, grid index ascending), used to break exact ties.
struct Front {
  std::vector<FrontPoint> pts;
  std::vector<std::uint32_t> lex_rank;
};

// Keeps the non-dominated points. Input must be in lexicographic strategy
// order so exact ties keep the lexicographically smallest strategy.
inline std::vector<FrontPoint> pareto(std::vector<FrontPoint> cand) {
  std::stable_sort(cand.begin(), cand.end(), [](const FrontPoint& x, const FrontPoint& y) {
    if (x.c != y.c) return x.c < y.c;
    return x.w > y.w;
  });
  std::vector<FrontPoint> out;
  double best_w = -std::numeric_limits<double>::infinity();
  for (const auto& p : cand) {
    if (p.w > best_w) {
      out.push_back(p);
      best_w = p.w;
    }
  }
  return out;
}

}  // namespace detail

/// Exhaustive grid search for the cheapest strategy reaching a win excess of
/// at least eps_tot (1 - grid_step). Every node's bias ranges over
/// {k grid_step : |k grid_step| <= 1/2} within the model's domain.
///
/// Equivalent to enumerating every grid strategy vector: subtrees are reduced
/// to their (win, catch) Pareto frontiers, which is exact because the parent's
/// win is monotone in the children's wins and its catch probability is
/// monotone in the children's catch probabilities. Among equal minima the
/// lexicographically smallest strategy vector (preorder) is returned.
inline BruteForceResult brute_force_min_pc(const GameTree& t, const CheatModel& m, double eps_tot,
                                           double grid_step) {
  using detail::Front;
  using detail::FrontPoint;

  if (m.is_prime()) throw DomainError("grid oracle requires the standard model");
  if (!(grid_step >= 1e-3 && grid_step <= 0.5)) throw DomainError("grid_step must lie in [1e-3, 0.5]");
  const std::size_t flips = t.internal_count();
  if (flips == 0) throw DomainError("tree has no coin flips");
  if (flips > kBruteForceMaxFlips) {
    throw DomainError("grid oracle is limited to " + std::to_string(kBruteForceMaxFlips) +
                      " flips, tree has " + std::to_string(flips));
  }
  const auto ann = annotate(t);

  // Symmetric grid containing 0 exactly.
  const double inv = 1.0 / grid_step;
  const double inv_r = std::round(inv);
  const bool integral = std::abs(inv - inv_r) < 1e-9;
  const auto half = static_cast<std::int32_t>(std::floor(0.5 / grid_step + 1e-9));
  std::vector<std::int32_t> js;
  std::vector<double> grid;
  std::vector<OutcomeTriple> trip;
  for (std::int32_t j = -half; j <= half; ++j) {
    const double e = integral ? j / inv_r : j * grid_step;
    if (!m.in_domain(e)) continue;
    js.push_back(j);
    grid.push_back(e);
    trip.push_back(triple(m, e));
  }

  const auto nodes = t.nodes();
  std::vector<Front> fronts(nodes.size());
  constexpr double kMaxWork = 4e9;

  // Children come after parents in preorder, so a reverse sweep is bottom-up.
  for (std::size_t k = nodes.size(); k-- > 1;) {
    const auto& nd = nodes[k];
    Front& f = fronts[k];
    if (nd.is_leaf()) {
      f.pts = {FrontPoint{leaf_win(nd.label), 0.0, 0, 0, 0}};
      f.lex_rank = {0};
      continue;
    }
    const Front& fu = fronts[nd.up];
    const Front& fd = fronts[nd.down];
    const double work = static_cast<double>(grid.size()) * static_cast<double>(fu.pts.size()) *
                        static_cast<double>(fd.pts.size());
    if (work > kMaxWork) throw DomainError("grid oracle: search space too large for this tree/grid");

    // Children's points in lexicographic order.
    std::vector<std::uint32_t> uo(fu.pts.size()), dord(fd.pts.size());
    for (std::uint32_t p = 0; p < uo.size(); ++p) uo[fu.lex_rank[p]] = p;
    for (std::uint32_t p = 0; p < dord.size(); ++p) dord[fd.lex_rank[p]] = p;

    std::vector<FrontPoint> merged;
    std::vector<FrontPoint> group;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto& tr = trip[g];
      group.clear();
      group.reserve(uo.size() * dord.size());
      for (auto ui : uo) {
        const auto& u = fu.pts[ui];
        for (auto di : dord) {
          const auto& d = fd.pts[di];
          group.push_back(FrontPoint{tr.p0 * u.w + tr.p1 * d.w, tr.pc + tr.p0 * u.c + tr.p1 * d.c,
                                     static_cast<std::int32_t>(g), ui, di});
        }
      }
      auto part = detail::pareto(std::move(group));
      group = {};
      merged.insert(merged.end(), part.begin(), part.end());
    }
    f.pts = detail::pareto(std::move(merged));

    std::vector<std::uint32_t> order(f.pts.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
      const auto& px = f.pts[x];
      const auto& py = f.pts[y];
      if (px.j != py.j) return px.j < py.j;
      if (fu.lex_rank[px.up] != fu.lex_rank[py.up]) return fu.lex_rank[px.up] < fu.lex_rank[py.up];
      return fd.lex_rank[px.down] < fd.lex_rank[py.down];
    });
    f.lex_rank.assign(f.pts.size(), 0);
    for (std::uint32_t r = 0; r < order.size(); ++r) f.lex_rank[order[r]] = r;
  }

  // Root: cheapest feasible combination, found with a monotone two-pointer
  // sweep (higher up-win needs no higher down-win).
  const auto& root = nodes[0];
  const Front& fu = fronts[root.up];
  const Front& fd = fronts[root.down];
  const double target = ann.root().p_w + eps_tot * (1.0 - grid_step);

  bool found = false;
  double best_c = 0.0;
  std::size_t best_g = 0, best_u = 0, best_d = 0;
  auto lex_less = [&](std::size_t g, std::size_t u, std::size_t d) {
    if (g != best_g) return g < best_g;
    if (fu.lex_rank[u] != fu.lex_rank[best_u]) return fu.lex_rank[u] < fu.lex_rank[best_u];
    return fd.lex_rank[d] < fd.lex_rank[best_d];
  };
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& tr = trip[g];
    auto win = [&](std::size_t u, std::size_t d) { return tr.p0 * fu.pts[u].w + tr.p1 * fd.pts[d].w; };
    std::size_t dp = fd.pts.size();
    for (std::size_t u = 0; u < fu.pts.size(); ++u) {
      while (dp > 0 && win(u, dp - 1) >= target) --dp;
      if (dp == fd.pts.size()) continue;
      const double c = tr.pc + tr.p0 * fu.pts[u].c + tr.p1 * fd.pts[dp].c;
      if (!found || c < best_c || (c == best_c && lex_less(g, u, dp))) {
        found = true;
        best_c = c;
        best_g = g;
        best_u = u;
        best_d = dp;
      }
    }
  }
  if (!found) throw DomainError("no grid strategy reaches the requested total bias");

  BruteForceResult res;
  res.strategy.eps.assign(nodes.size(), 0.0);
  res.strategy.eps[0] = grid[best_g];
  auto fill = [&](auto&& self, std::size_t node, std::uint32_t p) -> void {
    const auto& nd = nodes[node];
    if (nd.is_leaf()) return;
    const auto& pt = fronts[node].pts[p];
    res.strategy.eps[node] = grid[static_cast<std::size_t>(pt.j)];
    self(self, nd.up, pt.up);
    self(self, nd.down, pt.down);
  };
  fill(fill, root.up, static_cast<std::uint32_t>(best_u));
  fill(fill, root.down, static_cast<std::uint32_t>(best_d));

  const auto exact = exact_outcome(t, m, res.strategy);
  res.min_pc = exact.pc;
  res.win = exact.p0;
  return res;
}

inline nlohmann::json to_json(const TreeAnnotation& ann, const CompositionResult& r) {
  return {{"a", r.a},
          {"b", r.b},
          {"a_new", r.a_new},
          {"lambda", r.lambda},
          {"eps_tot", r.eps_tot},
          {"predicted_pc", r.predicted_pc},
          {"clipped", r.clipped},
          {"strategy", strategy_to_json(ann, r.strategy)}};
}

}  // namespace cheatflip
