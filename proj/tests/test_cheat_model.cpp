#include <cmath>

#include <gtest/gtest.h>

#include "cheatflip/cheat_model.hpp"

using namespace cheatflip;

TEST(Triple, HonestPlay) {
  const auto t = triple(CheatModel::standard(1, 2), 0.0);
  EXPECT_EQ(t.p0, 0.5);
  EXPECT_EQ(t.p1, 0.5);
  EXPECT_EQ(t.pc, 0.0);
}

TEST(Triple, PrimeAtEpsMax) {
  const auto m = CheatModel::prime(1);
  EXPECT_EQ(m.eps_max(), 0.25);
  const auto t = triple(m, m.eps_max());
  EXPECT_EQ(t.p0, 0.75);
  EXPECT_EQ(t.p1, 0.0);
  EXPECT_EQ(t.pc, 0.25);
}

TEST(Triple, StandardLinearBoundary) {
  const auto t = triple(CheatModel::standard(1, 1), 0.5);
  EXPECT_EQ(t.pc, 0.5);
  EXPECT_EQ(t.p0, 0.5);
  EXPECT_EQ(t.p1, 0.0);
}

TEST(Triple, DomainErrors) {
  EXPECT_THROW((void)triple(CheatModel::standard(1, 2), 0.51), DomainError);
  EXPECT_THROW((void)triple(CheatModel::standard(1, 2), -0.51), DomainError);
  EXPECT_THROW((void)triple(CheatModel::standard(3, 1), 0.4), DomainError);  // a eps > 1
  EXPECT_THROW((void)triple(CheatModel::prime(1), -0.01), DomainError);
  EXPECT_THROW((void)triple(CheatModel::prime(1), 0.2501), DomainError);
  EXPECT_THROW((void)CheatModel::standard(0, 2), DomainError);
  EXPECT_THROW((void)CheatModel::standard(1, 0.5), DomainError);
  EXPECT_THROW((void)CheatModel::prime(-1), DomainError);
}

TEST(Triple, NormalizationGrid) {
  for (double a : {0.5, 1.0, 2.0}) {
    for (double b : {1.0, 1.5, 2.0, 3.0}) {
      const auto m = CheatModel::standard(a, b);
      const double lo = m.eps_lo(), hi = m.eps_hi();
      for (int k = 0; k <= 10000; ++k) {
        const double e = lo + (hi - lo) * k / 10000.0;
        const auto t = triple(m, e);
        ASSERT_GE(t.p0, 0.0);
        ASSERT_GE(t.p1, 0.0);
        ASSERT_GE(t.pc, 0.0);
        ASSERT_LE(t.p0, 1.0);
        ASSERT_LE(t.p1, 1.0);
        ASSERT_LE(t.pc, 1.0);
        ASSERT_NEAR(t.p0 + t.p1 + t.pc, 1.0, 1e-12) << a << ' ' << b << ' ' << e;
      }
    }
    const auto p = CheatModel::prime(a);
    for (int k = 0; k <= 10000; ++k) {
      const auto t = triple(p, p.eps_max() * k / 10000.0);
      ASSERT_GE(t.p1, -1e-15);
      ASSERT_NEAR(t.p0 + t.p1 + t.pc, 1.0, 1e-12);
    }
  }
}

TEST(Triple, StandardSymmetryAndMonotonicity) {
  for (double b : {1.0, 1.5, 2.0, 3.0}) {
    const auto m = CheatModel::standard(1.0, b);
    double prev_pc = -1.0;
    for (int k = 0; k <= 500; ++k) {
      const double e = 0.5 * k / 500.0;
      const auto pos = triple(m, e);
      const auto neg = triple(m, -e);
      EXPECT_EQ(pos.p0, neg.p1);
      EXPECT_EQ(pos.p1, neg.p0);
      EXPECT_EQ(pos.pc, neg.pc);
      EXPECT_GE(pos.pc, prev_pc);
      prev_pc = pos.pc;
    }
  }
}

TEST(Dominates, Examples) {
  EXPECT_TRUE(dominates(CheatModel::prime(1), CheatModel::standard(1, 1), 0.0));
  EXPECT_TRUE(dominates(CheatModel::prime(1), CheatModel::standard(1, 1), 0.25));
  EXPECT_TRUE(dominates(CheatModel::prime(2), CheatModel::standard(2, 1), 1.0 / 6.0));
  // p0 3/4 against (3/4)(3/4)
  EXPECT_DOUBLE_EQ(triple(CheatModel::standard(1, 1), 0.25).p0, 9.0 / 16.0);
}

TEST(Dominates, GridProperty) {
  for (double a : {0.5, 1.0, 2.0}) {
    const auto p = CheatModel::prime(a);
    const auto s = CheatModel::standard(a, 1);
    for (int k = 0; k <= 1000; ++k) {
      EXPECT_TRUE(dominates(p, s, p.eps_max() * k / 1000.0)) << a << ' ' << k;
    }
  }
}

TEST(Dominates, MismatchedParameters) {
  EXPECT_THROW((void)dominates(CheatModel::standard(1, 1), CheatModel::standard(1, 1), 0.1), DomainError);
  EXPECT_THROW((void)dominates(CheatModel::prime(1), CheatModel::standard(2, 1), 0.1), DomainError);
  EXPECT_THROW((void)dominates(CheatModel::prime(1), CheatModel::standard(1, 2), 0.1), DomainError);
}

TEST(ParseModel, Syntax) {
  EXPECT_EQ(parse_model("std:a=1,b=2"), CheatModel::standard(1, 2));
  EXPECT_EQ(parse_model("STD:A=0.5, B=1.5"), CheatModel::standard(0.5, 1.5));
  EXPECT_EQ(parse_model("prime:a=1"), CheatModel::prime(1));
  EXPECT_EQ(parse_model("Prime:a=2"), CheatModel::prime(2));
  EXPECT_EQ(parse_model(format_model(CheatModel::standard(0.1, 2.5))), CheatModel::standard(0.1, 2.5));
  EXPECT_THROW((void)parse_model("std:a=1"), ParseError);
  EXPECT_THROW((void)parse_model("foo:a=1"), ParseError);
  EXPECT_THROW((void)parse_model("prime"), ParseError);
  EXPECT_THROW((void)parse_model("prime:a=x"), ParseError);
  EXPECT_THROW((void)parse_model("prime:a=1,c=2"), ParseError);
  EXPECT_THROW((void)parse_model("prime:a=1,b=2"), DomainError);
  EXPECT_THROW((void)parse_model("std:a=1,b=0.5"), DomainError);
}
