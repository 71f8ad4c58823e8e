#pragma once

// Command layer behind the `cheatflip` executable. Kept in a header so tests
// can drive commands in-process and inspect stdout and exit codes.
//
// Exit codes: 0 success, 1 invalid input, 2 an invariant check failed.

#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cheatflip/cheat_model.hpp"
#include "cheatflip/composer.hpp"
#include "cheatflip/error.hpp"
#include "cheatflip/game_tree.hpp"
#include "cheatflip/simulate.hpp"
#include "cheatflip/walk.hpp"

namespace cheatflip::cli {

inline constexpr int kOk = 0;
inline constexpr int kInvalidInput = 1;
inline constexpr int kInvariantViolation = 2;

inline constexpr double kLemmaTolerance = 1e-9;

inline std::string read_input(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_input(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void emit(std::ostream& out, const nlohmann::json& j) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Reporting (also the injection points for the exit-2 tests)
// ---------------------------------------------------------------------------

inline nlohmann::json analysis_json(const TreeAnnotation& ann) {
  const double p = ann.root().p_w;
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& n : ann.nodes()) {
    nlohmann::json e = {{"depth", n.depth}, {"p_w", n.p_w}};
    if (n.internal) e["delta"] = n.delta;
    nodes[n.path] = std::move(e);
  }
  return {{"p_w_root", p},
          {"lemma_sum", lemma_sum(ann)},
          {"lemma_expected", 4.0 * p * (1.0 - p)},
          {"nodes", nodes}};
}

inline int report_tree_analysis(const TreeAnnotation& ann, std::ostream& out, std::ostream& err) {
  auto j = analysis_json(ann);
  emit(out, j);
  const double gap = std::abs(j["lemma_sum"].get<double>() - j["lemma_expected"].get<double>());
  if (!(gap <= kLemmaTolerance)) {
    err << "invariant violated: |lemma_sum - 4p(1-p)| = " << gap << '\n';
    return kInvariantViolation;
  }
  return kOk;
}

inline int report_walk_solution(const WalkGame& g, const WalkSolution& s, std::ostream& out,
                                std::ostream& err) {
  emit(out, to_json(g, s));
  if (!s.bound_ok) {
    err << "invariant violated: delta exceeds the bound (2+a)/(2aN) = " << s.bound << '\n';
    return kInvariantViolation;
  }
  return kOk;
}

inline int report_sweep(const std::vector<SweepRecord>& rows, bool csv, std::ostream& out,
                        std::ostream& err) {
  if (csv) {
    write_sweep_csv(out, rows);
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
      arr.push_back({{"N", r.n},
                     {"a", r.a},
                     {"variant", to_string(r.variant)},
                     {"bias", r.bias},
                     {"bound", r.bound},
                     {"bound_ok", r.bound_ok},
                     {"iterations", r.iterations}});
    }
    emit(out, arr);
  }
  for (const auto& r : rows) {
    if (!r.bound_ok) {
      err << "invariant violated: bound fails at N = " << r.n << '\n';
      return kInvariantViolation;
    }
  }
  return kOk;
}

/// Emits the report plus the exact comparison; exit 2 on a > 4 sigma miss.
inline int report_simulation(const SimReport& r, const OutcomeTriple& exact, bool with_catch,
                             std::ostream& out, std::ostream& err) {
  auto j = to_json(r);
  bool ok = within_4_stderr(r, r.win(), exact.p0) && within_4_stderr(r, r.loss(), exact.p1);
  if (with_catch) ok = ok && within_4_stderr(r, r.caught(), exact.pc);
  j["exact"] = {{"win", exact.p0}, {"loss", exact.p1}, {"catch", exact.pc}};
  j["consistent"] = ok;
  emit(out, j);
  if (!ok) {
    err << "invariant violated: simulation deviates from the exact value by more than 4 stderr\n";
    return kInvariantViolation;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<int> parse_labels(const std::string& s) {
  std::vector<int> out;
  for (char c : s) {
    if (c == '0' || c == '1') {
      out.push_back(c - '0');
    } else if (c != ',' && c != ' ') {
      throw ParseError(std::string("labels may only contain 0, 1 and separators, got '") + c + "'");
    }
  }
  return out;
}

inline Strategy load_strategy(const std::string& spec, const GameTree& tree, const TreeAnnotation& ann,
                              const CheatModel& model) {
  if (spec == "honest") return Strategy::honest(tree);
  if (spec.rfind("lo:", 0) == 0) {
    const double eps_tot = cheatflip::detail::parse_decimal(spec.substr(3), "lo:<eps_tot>");
    if (model.is_prime()) throw DomainError("lo:<eps_tot> needs a standard model with b > 1");
    return leading_order(tree, model.a(), model.b(), eps_tot).strategy;
  }
  auto j = read_json(spec);
  if (j.is_object() && j.contains("strategy")) j = j["strategy"];
  return strategy_from_json(ann, j);
}

inline WalkPolicy load_policy(const std::string& spec, const WalkGame& g) {
  if (spec == "optimal") return optimize(g).policy;
  if (spec == "honest") return WalkPolicy::constant(g, 0.0);
  auto j = read_json(spec);
  if (j.is_object() && j.contains("policy")) j = j["policy"];
  return policy_from_json(g, j);
}

}  // namespace detail

/// Runs one command line (args exclude the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Serial composition of cheat-sensitive coin flips", "cheatflip"};
  app.require_subcommand(1);

  // tree
  auto* tree_cmd = app.add_subcommand("tree", "Generate or analyze game trees");
  tree_cmd->require_subcommand(1);
  auto* gen = tree_cmd->add_subcommand("gen", "Write a generated tree as JSON");
  std::string kind;
  int gen_n = 3;
  int gen_depth = 1;
  std::string gen_labels;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", kind, "best-of | full | random-fair")
      ->required()
      ->check(CLI::IsMember({"best-of", "full", "random-fair"}));
  gen->add_option("--n", gen_n, "Odd number of flips for best-of");
  gen->add_option("--depth", gen_depth, "Depth (full) or maximum depth (random-fair)");
  gen->add_option("--labels", gen_labels, "2^depth leaf bits for full, e.g. 0110");
  gen->add_option("--seed", gen_seed, "Seed for random-fair");

  auto* analyze = tree_cmd->add_subcommand("analyze", "Annotate a tree and check the lemma sum");
  std::string analyze_in;
  analyze->add_option("--in", analyze_in, "Tree JSON file ('-' for stdin)")->required();

  // compose
  auto* compose = app.add_subcommand("compose", "Leading-order optimal cheating on a fair tree");
  std::string compose_tree;
  double ca = 1.0, cb = 2.0, ceps = 0.0, cgrid = 1e-3;
  bool cexact = false, cbrute = false;
  compose->add_option("--tree", compose_tree, "Tree JSON file")->required();
  compose->add_option("--a", ca, "Cheat-detection coefficient")->required();
  compose->add_option("--b", cb, "Cheat-detection exponent (> 1)")->required();
  compose->add_option("--eps-tot", ceps, "Total bias")->required();
  compose->add_flag("--exact", cexact, "Also evaluate the strategy exactly");
  compose->add_flag("--brute-force", cbrute, "Also run the grid-search oracle");
  compose->add_option("--grid", cgrid, "Grid step for --brute-force");

  // walk
  auto* walk = app.add_subcommand("walk", "Random-walk game with linear cheat detection");
  walk->require_subcommand(1);
  auto* solve = walk->add_subcommand("solve", "Optimal cheating for one N");
  auto* sweep_cmd = walk->add_subcommand("sweep", "Optimal bias for N = 1..N_max");
  int walk_n = 1, walk_nmax = 1;
  std::string walk_model;
  bool walk_csv = false;
  solve->add_option("--n", walk_n, "Boundary distance N")->required();
  solve->add_option("--model", walk_model, "prime:a=... or std:a=...,b=1")->required();
  sweep_cmd->add_option("--n-max", walk_nmax, "Largest N")->required();
  sweep_cmd->add_option("--model", walk_model, "prime:a=... or std:a=...,b=1")->required();
  sweep_cmd->add_flag("--csv", walk_csv, "CSV instead of JSON");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo check against the exact solution");
  std::string sim_tree, sim_model, sim_strategy = "honest", sim_policy = "optimal";
  bool sim_walk = false;
  int sim_n = 1;
  std::uint64_t sim_trials = 1000000, sim_seed = 42, sim_cap = 0;
  unsigned sim_workers = default_workers();
  auto* opt_tree = sim->add_option("--tree", sim_tree, "Tree JSON file");
  auto* opt_walk = sim->add_flag("--walk", sim_walk, "Simulate the walk game");
  opt_tree->excludes(opt_walk);
  sim->add_option("--model", sim_model, "Coin model")->required();
  sim->add_option("--strategy", sim_strategy, "honest | lo:<eps_tot> | strategy JSON file");
  sim->add_option("--policy", sim_policy, "optimal | honest | policy JSON file");
  sim->add_option("--n", sim_n, "Walk boundary distance N");
  sim->add_option("--trials", sim_trials, "Number of trials");
  sim->add_option("--seed", sim_seed, "Seed");
  sim->add_option("--step-cap", sim_cap, "Walk step cap (default 64 N^2)");
  sim->add_option("--workers", sim_workers, "Worker threads");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  try {
    if (*gen) {
      GameTree t = GameTree::leaf(0);
      if (kind == "best-of") {
        t = gen_best_of(gen_n);
      } else if (kind == "full") {
        const auto labels = detail::parse_labels(gen_labels);
        t = gen_full(gen_depth, labels);
      } else {
        t = gen_random_fair(gen_depth, gen_seed);
      }
      out << serialize_tree(t) << '\n';
      return kOk;
    }
    if (*analyze) {
      const auto t = parse_tree(read_input(analyze_in));
      return report_tree_analysis(annotate(t), out, err);
    }
    if (*compose) {
      const auto t = parse_tree(read_input(compose_tree));
      const auto r = leading_order(t, ca, cb, ceps);
      const auto ann = annotate(t);
      auto j = to_json(ann, r);
      if (cexact || cbrute) {
        const auto model = CheatModel::standard(ca, cb);
        if (cexact) {
          const auto ex = exact_outcome(t, model, r.strategy);
          j["exact"] = {{"p0", ex.p0}, {"p1", ex.p1}, {"pc", ex.pc}};
        }
        if (cbrute) {
          const auto bf = brute_force_min_pc(t, model, ceps, cgrid);
          j["brute_force"] = {{"grid", cgrid},
                              {"min_pc", bf.min_pc},
                              {"win", bf.win},
                              {"strategy", strategy_to_json(ann, bf.strategy)}};
        }
      }
      emit(out, j);
      return kOk;
    }
    if (*solve) {
      const WalkGame g(walk_n, parse_model(walk_model));
      return report_walk_solution(g, optimize(g), out, err);
    }
    if (*sweep_cmd) {
      if (walk_nmax < 1) throw DomainError("--n-max must be >= 1");
      std::vector<int> ns(static_cast<std::size_t>(walk_nmax));
      for (int i = 0; i < walk_nmax; ++i) ns[static_cast<std::size_t>(i)] = i + 1;
      const auto model = parse_model(walk_model);
      (void)WalkGame(1, model);  // validates b = 1
      return report_sweep(sweep(model, ns), walk_csv, out, err);
    }
    if (*sim) {
      const auto model = parse_model(sim_model);
      if (sim_walk) {
        const WalkGame g(sim_n, model);
        const auto pol = detail::load_policy(sim_policy, g);
        const std::uint64_t cap =
            sim_cap != 0 ? sim_cap : 64ull * static_cast<std::uint64_t>(sim_n) * static_cast<std::uint64_t>(sim_n);
        const auto rep = simulate_walk(g, pol, sim_trials, sim_seed, cap, sim_workers);
        const double w0 = evaluate_policy(g, pol).w_at(0);
        return report_simulation(rep, OutcomeTriple{w0, 1.0 - w0, 0.0}, false, out, err);
      }
      if (sim_tree.empty()) throw ParseError("simulate needs --tree <file> or --walk");
      const auto t = parse_tree(read_input(sim_tree));
      const auto ann = annotate(t);
      const auto strat = detail::load_strategy(sim_strategy, t, ann, model);
      const auto rep = simulate_tree(t, model, strat, sim_trials, sim_seed, sim_workers);
      return report_simulation(rep, exact_outcome(t, model, strat), true, out, err);
    }
  } catch (const InvariantError& e) {
    err << "invariant violated: " << e.what() << '\n';
    return kInvariantViolation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kInvalidInput;
}

}  // namespace cheatflip::cli
