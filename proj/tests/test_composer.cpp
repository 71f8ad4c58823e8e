#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "cheatflip/composer.hpp"
#include "tree_oracles.hpp"

using namespace cheatflip;

namespace {

GameTree one_flip() { return GameTree::flip(GameTree::leaf(0), GameTree::leaf(1)); }

GameTree full(int depth, std::vector<int> labels) { return gen_full(depth, labels); }

// sum_x 2^-D(x) |Delta(x)|^(b/(b-1)) from the best-of-3 node labels, written out.
constexpr double kBestOf3InfluenceB3 = 0.35355339059327373 + 2 * 0.5 * 0.35355339059327373 + 2 * 0.25;
// Frozen from an independent enumeration script: 1 / kBestOf3InfluenceB3^2.
constexpr double kBestOf3ANewB3 = 0.6862915010152396;

}  // namespace

TEST(LeadingOrder, BestOf3QuadraticStrategyIsEpsTotTimesDelta) {
  const auto t = gen_best_of(3);
  const auto ann = annotate(t);
  const auto r = leading_order(t, 1.0, 2.0, 0.1);
  EXPECT_NEAR(r.a_new, 1.0, 1e-12);
  EXPECT_FALSE(r.clipped);
  for (std::size_t i = 0; i < ann.size(); ++i) {
    if (ann[i].internal) {
      EXPECT_NEAR(r.strategy[i], 0.1 * ann[i].delta, 1e-12);
    }
  }
  EXPECT_NEAR(r.predicted_pc, 0.01, 1e-12);
  // lambda = a b eps_tot / S at b = 2
  EXPECT_NEAR(r.lambda, 0.2, 1e-12);
}

TEST(LeadingOrder, OneFlipAnyExponent) {
  for (double b : {1.5, 2.0, 3.0, 5.0}) {
    for (double a : {0.5, 2.0}) {
      const auto r = leading_order(one_flip(), a, b, 0.3);
      EXPECT_NEAR(r.strategy[0], 0.3, 1e-15);
      EXPECT_NEAR(r.a_new, a, 1e-15);
    }
  }
}

TEST(LeadingOrder, BestOf3CubicValue) {
  EXPECT_NEAR(kBestOf3ANewB3, 1.0 / (kBestOf3InfluenceB3 * kBestOf3InfluenceB3), 1e-15);
  const auto r = leading_order(gen_best_of(3), 1.0, 3.0, 0.01);
  EXPECT_NEAR(r.a_new, kBestOf3ANewB3, 1e-12);
  EXPECT_NEAR(a_new_of_b(gen_best_of(3), 1.0, 3.0), 0.68629, 5e-4);
}

TEST(LeadingOrder, ConstraintAndPredictionInvariants) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto t = gen_random_fair(7, s);
    const auto ann = annotate(t);
    for (double b : {1.5, 2.0, 2.5, 4.0}) {
      const double eps_tot = 0.01 + 0.001 * static_cast<double>(s % 7);
      const auto r = leading_order(t, 1.3, b, eps_tot);
      double constraint = 0.0;
      for (std::size_t i = 0; i < ann.size(); ++i) {
        if (ann[i].internal) constraint += ann[i].reach * ann[i].delta * r.strategy[i];
      }
      if (!r.clipped) {
        EXPECT_NEAR(constraint, eps_tot, 1e-12);
      }
      EXPECT_NEAR(r.predicted_pc, r.a_new * std::pow(eps_tot, b), 1e-12);
      // Direct leading-order catch probability of the strategy.
      double pc = 0.0;
      for (std::size_t i = 0; i < ann.size(); ++i) {
        if (ann[i].internal) pc += 1.3 * ann[i].reach * std::pow(std::abs(r.strategy[i]), b);
      }
      if (!r.clipped) {
        EXPECT_NEAR(pc, r.predicted_pc, 1e-12 + 1e-10 * r.predicted_pc);
      }
    }
  }
}

TEST(LeadingOrder, ZeroDeltaNodesDoNotCheat) {
  const auto t = full(2, {0, 1, 1, 0});
  const auto r = leading_order(t, 1.0, 2.0, 0.05);
  EXPECT_EQ(r.strategy[0], 0.0);
  EXPECT_NEAR(r.strategy[1], 0.05, 1e-15);
  EXPECT_NEAR(r.strategy[4], -0.05, 1e-15);
}

TEST(LeadingOrder, QuadraticNeverClips) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto t = gen_random_fair(8, s);
    EXPECT_FALSE(leading_order(t, 1.0, 2.0, 0.5).clipped);
  }
}

TEST(LeadingOrder, ClipsAwayFromQuadratic) {
  // b = 1.5 on best-of-3: S = 3/4 and the Delta = 1 nodes want eps_tot / S.
  const auto r = leading_order(gen_best_of(3), 1.0, 1.5, 0.5);
  EXPECT_TRUE(r.clipped);
  for (double e : r.strategy.eps) EXPECT_LE(std::abs(e), 0.5);
}

TEST(LeadingOrder, Errors) {
  EXPECT_THROW((void)leading_order(one_flip(), 1.0, 1.0, 0.1), DomainError);
  EXPECT_THROW((void)leading_order(one_flip(), 1.0, 0.5, 0.1), DomainError);
  EXPECT_THROW((void)leading_order(GameTree::leaf(0), 1.0, 2.0, 0.1), DomainError);
  EXPECT_THROW((void)leading_order(full(2, {0, 0, 0, 1}), 1.0, 2.0, 0.1), DomainError);  // unfair
  EXPECT_THROW((void)leading_order(one_flip(), 1.0, 2.0, 0.6), DomainError);
}

TEST(ANewOfB, FixedPointAtTwo) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto t = gen_random_fair(9, s);
    for (double a : {0.5, 1.0, 2.0}) EXPECT_NEAR(a_new_of_b(t, a, 2.0), a, 1e-10 * a);
  }
  for (double b : {1.2, 2.0, 7.0}) EXPECT_NEAR(a_new_of_b(one_flip(), 1.7, b), 1.7, 1e-15);
}

TEST(DerivativeInB, Signs) {
  EXPECT_NEAR(derivative_in_b(one_flip(), 1.0, 2.0, 0.01), 0.0, 1e-12);
  // Frozen from the enumeration script: -0.34657 and -0.53578.
  EXPECT_NEAR(derivative_in_b(gen_best_of(3), 1.0, 2.0, 0.01), -0.3465661962485378, 1e-9);
  EXPECT_NEAR(derivative_in_b(gen_best_of(5), 1.0, 2.0, 0.01), -0.5357759006443918, 1e-9);
  for (std::uint64_t s = 0; s < 100; ++s) {
    EXPECT_LE(derivative_in_b(gen_random_fair(8, s), 1.0, 2.0, 0.01), 1e-12) << s;
  }
  EXPECT_THROW((void)derivative_in_b(one_flip(), 1.0, 1.05, 0.1), DomainError);
  EXPECT_THROW((void)derivative_in_b(one_flip(), 1.0, 2.0, 0.2), DomainError);
}

TEST(ExactOutcome, HonestPlay) {
  const auto m = CheatModel::standard(1, 2);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto t = gen_random(8, s);
    const auto o = exact_outcome(t, m, Strategy::honest(t));
    const double p = annotate(t).root().p_w;
    EXPECT_DOUBLE_EQ(o.p0, p);
    EXPECT_DOUBLE_EQ(o.p1, 1.0 - p);
    EXPECT_EQ(o.pc, 0.0);
  }
}

TEST(ExactOutcome, OneFlip) {
  const auto t = one_flip();
  const auto o = exact_outcome(t, CheatModel::standard(1, 2), Strategy{{0.1, 0.0, 0.0}});
  EXPECT_NEAR(o.pc, 0.01, 1e-15);
  EXPECT_NEAR(o.p0, 0.594, 1e-15);
  EXPECT_NEAR(o.p1, 0.396, 1e-15);
}

TEST(ExactOutcome, BestOf3AgreesWithLeadingOrder) {
  const auto t = gen_best_of(3);
  const auto m = CheatModel::standard(1, 2);
  const auto r = leading_order(t, 1.0, 2.0, 0.01);
  const auto o = exact_outcome(t, m, r.strategy);
  EXPECT_NEAR(o.p0 - 0.5, 0.01, 1e-4);
  EXPECT_NEAR(o.pc / 1e-4, 1.0, 0.1);
  EXPECT_NEAR(o.p0 + o.p1 + o.pc, 1.0, 1e-14);
}

TEST(ExactOutcome, ConvergesToLeadingOrder) {
  // |exact_pc / predicted - 1| shrinks roughly linearly with eps_tot.
  for (const auto& t : {gen_best_of(3), gen_best_of(5), full(2, {0, 1, 1, 0})}) {
    const auto m = CheatModel::standard(1, 2);
    double prev = 1e9;
    for (double e : {0.02, 0.01, 0.005}) {
      const auto o = exact_outcome(t, m, leading_order(t, 1.0, 2.0, e).strategy);
      const double dev = std::abs(o.pc / (e * e) - 1.0);
      // Single-level trees have no higher-order terms: dev is exactly 0.
      EXPECT_TRUE(dev < prev || dev <= 1e-15) << dev << ' ' << prev;
      EXPECT_LT(dev, 10.0 * e);
      prev = dev;
    }
  }
}

TEST(ExactOutcome, MissingEntries) {
  EXPECT_THROW((void)exact_outcome(gen_best_of(3), CheatModel::standard(1, 2), Strategy{{0.0}}), DomainError);
}

TEST(StrategyJson, RoundTripAndErrors) {
  const auto t = gen_best_of(3);
  const auto ann = annotate(t);
  const auto r = leading_order(t, 1.0, 2.0, 0.1);
  const auto j = strategy_to_json(ann, r.strategy);
  EXPECT_EQ(j.size(), 5u);
  EXPECT_EQ(strategy_from_json(ann, j).eps, r.strategy.eps);
  auto missing = j;
  missing.erase("UD");
  EXPECT_THROW((void)strategy_from_json(ann, missing), ParseError);
  auto extra = j;
  extra["UU"] = 0.1;  // a leaf
  EXPECT_THROW((void)strategy_from_json(ann, extra), ParseError);
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

namespace {

/// Plain nested-loop enumeration for trees with at most 3 flips at a coarse
/// grid: the reference the Pareto search must reproduce exactly.
double enumerate_min_pc(const GameTree& t, const CheatModel& m, double eps_tot, double step) {
  const auto ann = annotate(t);
  std::vector<std::size_t> flips;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!t.node(i).is_leaf()) flips.push_back(i);
  }
  const int half = static_cast<int>(std::floor(0.5 / step + 1e-9));
  std::vector<int> k(flips.size(), -half);
  double best = 2.0;
  const double target = ann.root().p_w + eps_tot * (1.0 - step);
  for (;;) {
    Strategy s = Strategy::honest(t);
    for (std::size_t f = 0; f < flips.size(); ++f) s.eps[flips[f]] = k[f] / std::round(1.0 / step);
    const auto o = exact_outcome(t, m, s);
    if (o.p0 >= target) best = std::min(best, o.pc);
    std::size_t f = 0;
    while (f < k.size() && ++k[f] > half) k[f++] = -half;
    if (f == k.size()) break;
  }
  return best;
}

}  // namespace

TEST(BruteForce, OneFlip) {
  const auto r = brute_force_min_pc(one_flip(), CheatModel::standard(1, 2), 0.1, 1e-3);
  EXPECT_NEAR(r.min_pc, 0.01, 2e-3);
  EXPECT_GE(r.win - 0.5, 0.1 * (1 - 1e-3));
}

TEST(BruteForce, FullDepthTwoMatchesClosedForm) {
  const auto t = full(2, {0, 1, 1, 0});
  const auto m = CheatModel::standard(1, 2);
  const auto r = brute_force_min_pc(t, m, 0.05, 1e-3);
  const double closed = a_new_of_b(t, 1.0, 2.0) * 0.05 * 0.05;
  EXPECT_NEAR(r.min_pc, closed, 3e-3);
  EXPECT_EQ(r.strategy[0], 0.0);  // Delta(root) = 0: cheating there only costs
}

TEST(BruteForce, ZeroBiasIsHonest) {
  const auto t = gen_best_of(3);
  const auto r = brute_force_min_pc(t, CheatModel::standard(1, 2), 0.0, 1e-2);
  EXPECT_EQ(r.min_pc, 0.0);
  for (double e : r.strategy.eps) EXPECT_EQ(e, 0.0);
}

TEST(BruteForce, ParetoSearchEqualsNestedLoops) {
  const auto m = CheatModel::standard(1, 2);
  const std::vector<GameTree> trees{one_flip(), full(2, {0, 1, 1, 0}), gen_random_fair(3, 5),
                                    full(2, {0, 0, 1, 1})};
  for (const auto& t : trees) {
    if (t.internal_count() > 3 || !is_fair(annotate(t))) continue;
    for (double e : {0.02, 0.1, 0.2}) {
      const double step = 0.02;
      const auto r = brute_force_min_pc(t, m, e, step);
      EXPECT_DOUBLE_EQ(r.min_pc, enumerate_min_pc(t, m, e, step)) << serialize_tree(t) << ' ' << e;
    }
  }
}

TEST(BruteForce, Guards) {
  const auto m = CheatModel::standard(1, 2);
  EXPECT_THROW((void)brute_force_min_pc(gen_best_of(5), m, 0.02, 1e-3), DomainError);
  EXPECT_THROW((void)brute_force_min_pc(gen_best_of(3), m, 0.02, 1e-4), DomainError);
  EXPECT_THROW((void)brute_force_min_pc(gen_best_of(3), CheatModel::prime(1), 0.02, 1e-3), DomainError);
  // One flip tops out at bias 1/4 when a = 1, b = 2.
  EXPECT_THROW((void)brute_force_min_pc(one_flip(), m, 0.3, 0.02), DomainError);
}

TEST(BruteForce, NeverBeatsTheLagrangianByMoreThanGridSlack) {
  const auto m = CheatModel::standard(1, 2);
  const auto t = gen_best_of(3);
  for (double e : {0.02, 0.05}) {
    const auto r = brute_force_min_pc(t, m, e, 1e-3);
    const double closed = a_new_of_b(t, 1.0, 2.0) * e * e;
    EXPECT_LE(r.min_pc - closed, 3e-3);
    EXPECT_GE(r.min_pc - closed, -3e-3);
  }
}
