#pragma once

// Random-walk composition game for linear cheat detection.
//
// The coin drives a walk on {-N, ..., N} starting at 0; reaching +N is game
// outcome 0 (the cheater's goal), reaching -N is outcome 1. When the honest
// player catches cheating at site z they finish the walk with a private fair
// coin, which pays the cheater (N+z)/(2N). With a stationary bias eps(z) the
// cheater's win probability satisfies
//
//   W(z) = p0 W(z+1) + p1 W(z-1) + pc (N+z)/(2N),   W(-N) = 0, W(N) = 1.
//
// For linear detection the optimal excess delta(0) = W(0) - 1/2 is at most
// (2+a)/(2aN).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cheatflip/cheat_model.hpp"
#include "cheatflip/error.hpp"

namespace cheatflip {

class WalkGame {
 public:
  WalkGame(int n, CheatModel model) : n_(n), model_(model) {
    if (n < 1) throw DomainError("walk half-width N must be >= 1, got " + std::to_string(n));
    if (model.b() != 1.0) throw DomainError("walk game requires linear cheat detection (b = 1)");
  }

  [[nodiscard]] int n() const noexcept { return n_; }
  [[nodiscard]] const CheatModel& model() const noexcept { return model_; }
  [[nodiscard]] int interior_count() const noexcept { return 2 * n_ - 1; }

  /// Catch payoff (N+z)/(2N).
  [[nodiscard]] double honest_value(int z) const noexcept {
    return static_cast<double>(n_ + z) / (2.0 * n_);
  }

  /// Bias bound (2+a)/(2aN).
  [[nodiscard]] double bound() const noexcept {
    return (2.0 + model_.a()) / (2.0 * model_.a() * n_);
  }

 private:
  int n_;
  CheatModel model_;
};

/// Stationary bias per interior site; eps[z + N - 1] is the bias at z.
struct WalkPolicy {
  int n = 0;
  std::vector<double> eps;

  static WalkPolicy constant(const WalkGame& g, double e) {
    return WalkPolicy{g.n(), std::vector<double>(static_cast<std::size_t>(g.interior_count()), e)};
  }
  [[nodiscard]] double at(int z) const { return eps.at(static_cast<std::size_t>(z + n - 1)); }
  double& at(int z) { return eps.at(static_cast<std::size_t>(z + n - 1)); }
};

struct WalkSolution {
  int n = 0;
  std::vector<double> w;      // w[z + N], z in [-N, N]
  std::vector<double> delta;  // w(z) - (N+z)/(2N)
  WalkPolicy policy;
  double bias = 0.0;  // delta(0)
  double bound = 0.0;
  bool bound_ok = false;
  int iterations = 0;
  double max_residual = 0.0;
  std::vector<double> value_history;  // W(0) after each policy evaluation

  [[nodiscard]] double w_at(int z) const { return w.at(static_cast<std::size_t>(z + n)); }
  [[nodiscard]] double delta_at(int z) const { return delta.at(static_cast<std::size_t>(z + n)); }
};

inline constexpr double kBoundSlack = 1e-12;
inline constexpr double kResidualTolerance = 1e-10;

/// Recomputes delta, bias and bound_ok from w.
inline void refresh_derived(const WalkGame& g, WalkSolution& s) {
  const int n = g.n();
  s.delta.resize(s.w.size());
  bool ok = true;
  for (int z = -n; z <= n; ++z) {
    const auto i = static_cast<std::size_t>(z + n);
    s.delta[i] = s.w[i] - g.honest_value(z);
    if (!(s.delta[i] <= g.bound() + kBoundSlack)) ok = false;
  }
  s.bias = s.delta_at(0);
  s.bound = g.bound();
  s.bound_ok = ok;
}

/// Solves the linear system for W under a fixed policy (Thomas algorithm).
inline WalkSolution evaluate_policy(const WalkGame& g, const WalkPolicy& pol) {
  const int n = g.n();
  const auto m = static_cast<std::size_t>(g.interior_count());
  if (pol.n != n || pol.eps.size() != m) throw DomainError("policy does not match the walk");

  // Row i (site z = i - N + 1):  W(z) - p0 W(z+1) - p1 W(z-1) = pc T(z).
  std::vector<double> lower(m), upper(m), rhs(m);
  std::vector<OutcomeTriple> tr(m);
  for (std::size_t i = 0; i < m; ++i) {
    const int z = static_cast<int>(i) - n + 1;
    tr[i] = triple(g.model(), pol.eps[i]);
    lower[i] = -tr[i].p1;
    upper[i] = -tr[i].p0;
    rhs[i] = tr[i].pc * g.honest_value(z);
    // |lower| + |upper| = p0 + p1 <= 1 = diagonal.
    if (tr[i].p0 + tr[i].p1 > 1.0 + 1e-15) throw InvariantError("walk system is not diagonally dominant");
  }
  rhs[m - 1] += tr[m - 1].p0 * 1.0;  // W(N) = 1; W(-N) = 0 adds nothing

  std::vector<double> c(m), d(m);
  double denom = 1.0;
  c[0] = upper[0] / denom;
  d[0] = rhs[0] / denom;
  for (std::size_t i = 1; i < m; ++i) {
    denom = 1.0 - lower[i] * c[i - 1];
    if (!(denom > 0.0)) throw InvariantError("singular walk system");
    c[i] = upper[i] / denom;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
  }
  WalkSolution s;
  s.n = n;
  s.policy = pol;
  s.w.assign(2 * static_cast<std::size_t>(n) + 1, 0.0);
  s.w.back() = 1.0;
  std::vector<double> x(m);
  x[m - 1] = d[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  for (std::size_t i = 0; i < m; ++i) s.w[i + 1] = x[i];

  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const int z = static_cast<int>(i) - n + 1;
    const double r = s.w[i + 1] -
                     (tr[i].p0 * s.w[i + 2] + tr[i].p1 * s.w[i] + tr[i].pc * g.honest_value(z));
    worst = std::max(worst, std::abs(r));
  }
  s.max_residual = worst;
  if (!(worst <= kResidualTolerance)) {
    throw InvariantError("walk solve residual " + std::to_string(worst) + " exceeds tolerance");
  }
  refresh_derived(g, s);
  return s;
}

namespace detail {

/// One-step value of playing e at z given neighbour values.
inline double step_value(const WalkGame& g, int z, double e, double w_up, double w_down) {
  const auto t = triple(g.model(), e);
  return t.p0 * w_up + t.p1 * w_down + t.pc * g.honest_value(z);
}

/// Best bias at one site given W(z+1), W(z-1). Ties go to the smaller bias.
inline double best_site_bias(const WalkGame& g, int z, double w_up, double w_down) {
  const auto& m = g.model();
  std::vector<double> cand;
  cand.push_back(0.0);
  if (m.is_prime()) {
    cand.push_back(m.eps_max());
  } else {
    // (1 - a e)((A + e B)) + a e T with A = (w_up + w_down)/2, B = w_up - w_down
    // = A + e (B - a A + a T) - a B e^2.
    const double a = m.a();
    const double hi = m.eps_hi();
    const double A = 0.5 * (w_up + w_down);
    const double B = w_up - w_down;
    const double lin = B - a * A + a * g.honest_value(z);
    if (B > 0.0) cand.push_back(std::clamp(lin / (2.0 * a * B), 0.0, hi));
    cand.push_back(hi);
  }
  double best_e = 0.0;
  double best_v = step_value(g, z, 0.0, w_up, w_down);
  for (double e : cand) {
    const double v = step_value(g, z, e, w_up, w_down);
    if (v > best_v || (v == best_v && e < best_e)) {
      best_v = v;
      best_e = e;
    }
  }
  return best_e;
}

}  // namespace detail

/// Policy iteration from the honest policy. A site only switches when the new
/// bias improves its one-step value by more than a rounding-level margin,
/// which makes the iteration monotone and finite.
inline WalkSolution optimize(const WalkGame& g) {
  const int n = g.n();
  WalkPolicy pol = WalkPolicy::constant(g, 0.0);
  WalkSolution sol = evaluate_policy(g, pol);
  std::vector<double> history{sol.w_at(0)};
  const int max_sweeps = 10 * (2 * n);
  int sweeps = 0;
  for (;;) {
    if (sweeps >= max_sweeps) {
      throw InvariantError("policy iteration did not converge within " + std::to_string(max_sweeps) +
                           " sweeps");
    }
    ++sweeps;
    bool changed = false;
    WalkPolicy next = pol;
    for (int z = -n + 1; z <= n - 1; ++z) {
      const double up = sol.w_at(z + 1);
      const double down = sol.w_at(z - 1);
      const double cur = pol.at(z);
      const double e = detail::best_site_bias(g, z, up, down);
      const double gain = detail::step_value(g, z, e, up, down) - detail::step_value(g, z, cur, up, down);
      if (e != cur && gain > 1e-15) {
        next.at(z) = e;
        changed = true;
      }
    }
    if (!changed) break;
    pol = std::move(next);
    sol = evaluate_policy(g, pol);
    history.push_back(sol.w_at(0));
  }
  sol.iterations = sweeps;
  sol.value_history = std::move(history);
  return sol;
}

inline constexpr int kBruteForceMaxN = 5;

/// Enumerates every binary Prime policy (2^(2N-1) of them).
inline WalkSolution brute_force_optimize(const WalkGame& g) {
  if (!g.model().is_prime()) throw DomainError("binary-policy enumeration requires the prime model");
  if (g.n() > kBruteForceMaxN) {
    throw DomainError("binary-policy enumeration is limited to N <= " + std::to_string(kBruteForceMaxN));
  }
  const int m = g.interior_count();
  WalkSolution best;
  bool have = false;
  std::uint32_t count = 0;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask, ++count) {
    WalkPolicy pol = WalkPolicy::constant(g, 0.0);
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) pol.eps[static_cast<std::size_t>(i)] = g.model().eps_max();
    }
    auto s = evaluate_policy(g, pol);
    if (!have || s.bias > best.bias) {
      best = std::move(s);
      have = true;
    }
  }
  best.iterations = static_cast<int>(count);
  return best;
}

struct SweepRecord {
  int n = 0;
  double a = 0.0;
  Variant variant = Variant::Prime;
  double bias = 0.0;
  double bound = 0.0;
  bool bound_ok = false;
  int iterations = 0;
};

/// Optimal bias for each N, in the order given.
inline std::vector<SweepRecord> sweep(const CheatModel& model, const std::vector<int>& ns) {
  std::vector<SweepRecord> out;
  out.reserve(ns.size());
  for (int n : ns) {
    const WalkGame g(n, model);
    const auto s = optimize(g);
    out.push_back({n, model.a(), model.variant(), s.bias, s.bound, s.bound_ok, s.iterations});
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& rows) {
  os << "N,a,variant,bias,bound,bound_ok,iterations\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%s,%.17g,%.17g,%s,%d\n", r.n, r.a,
                  std::string(to_string(r.variant)).c_str(), r.bias, r.bound,
                  r.bound_ok ? "true" : "false", r.iterations);
    os << buf;
  }
}

inline nlohmann::json policy_to_json(const WalkPolicy& p) {
  nlohmann::json j = nlohmann::json::object();
  for (int z = -p.n + 1; z <= p.n - 1; ++z) j[std::to_string(z)] = p.at(z);
  return j;
}

inline WalkPolicy policy_from_json(const WalkGame& g, const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("policy must be a JSON object {z: eps}");
  WalkPolicy p = WalkPolicy::constant(g, 0.0);
  std::vector<bool> seen(p.eps.size(), false);
  for (const auto& [key, value] : j.items()) {
    int z = 0;
    try {
      std::size_t used = 0;
      z = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ParseError("policy key '" + key + "' is not an integer site");
    }
    if (z <= -g.n() || z >= g.n()) throw ParseError("policy site " + key + " is not interior");
    if (!value.is_number()) throw ParseError("policy entry '" + key + "' is not a number");
    const double e = value.get<double>();
    if (!g.model().in_domain(e)) throw DomainError("policy bias at site " + key + " is outside the model domain");
    p.at(z) = e;
    seen[static_cast<std::size_t>(z + g.n() - 1)] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw ParseError("policy is missing site " + std::to_string(static_cast<int>(i) - g.n() + 1));
    }
  }
  return p;
}

inline nlohmann::json to_json(const WalkGame& g, const WalkSolution& s) {
  nlohmann::json w = nlohmann::json::object();
  nlohmann::json delta = nlohmann::json::object();
  for (int z = -s.n; z <= s.n; ++z) {
    w[std::to_string(z)] = s.w_at(z);
    delta[std::to_string(z)] = s.delta_at(z);
  }
  return {{"N", s.n},
          {"model", format_model(g.model())},
          {"W", w},
          {"delta", delta},
          {"policy", policy_to_json(s.policy)},
          {"bias", s.bias},
          {"bound", s.bound},
          {"bound_ok", s.bound_ok},
          {"iterations", s.iterations},
          {"max_residual", s.max_residual}};
}

}  // namespace cheatflip
