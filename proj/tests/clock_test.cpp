#include <gtest/gtest.h>

#include <random>

#include "nbsim/clock.hpp"

using namespace nbsim;

TEST(Clock, AdvanceMatchesAbsoluteIncrement) {
  SubframeClock c{};
  for (AbsSf n = 0; n < 3 * kSubframesPerHyperframe; ++n) {
    ASSERT_EQ(to_abs(c) % kHyperCycle, n % kHyperCycle);
    ASSERT_EQ(from_abs(n), c);
    c = advance(c);
  }
}

TEST(Clock, WrapsAtHyperCycle) {
  const SubframeClock last{1023, 1023, 9};
  EXPECT_TRUE(last.valid());
  EXPECT_EQ(to_abs(last), kHyperCycle - 1);
  EXPECT_EQ(advance(last), (SubframeClock{0, 0, 0}));
  EXPECT_EQ(from_abs(kHyperCycle), (SubframeClock{0, 0, 0}));
}

TEST(Clock, OrderingIsLexicographic) {
  EXPECT_LT((SubframeClock{0, 5, 9}), (SubframeClock{0, 6, 0}));
  EXPECT_LT((SubframeClock{0, 1023, 9}), (SubframeClock{1, 0, 0}));
  EXPECT_FALSE((SubframeClock{0, 1024, 0}).valid());
  EXPECT_FALSE((SubframeClock{0, 0, 10}).valid());
}

// Brute force: walk back from the reference until (sfn, sf) matches.
TEST(Clock, ResolveSfnSfAgainstLinearSearch) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const AbsSf ref = 10240 + rng() % 500000;
    const AbsSf truth = ref - rng() % 10240;
    const auto c = from_abs(truth);
    AbsSf expect = ref;
    while (!(from_abs(expect).sfn == c.sfn && from_abs(expect).sf == c.sf)) --expect;
    EXPECT_EQ(resolve_sfn_sf(ref, c.sfn, c.sf), expect);
    EXPECT_EQ(expect, truth);
  }
}

TEST(Clock, ResolveNearStart) {
  EXPECT_EQ(resolve_sfn_sf(0, 0, 0), 0u);
  EXPECT_EQ(resolve_sfn_sf(25, 2, 5), 25u);
  EXPECT_EQ(resolve_sfn_sf(25, 1, 3), 13u);
}
