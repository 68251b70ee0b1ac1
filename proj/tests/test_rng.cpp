#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "superlearn/rng.hpp"

using namespace superlearn;

TEST(Rng, SameSeedAndPathReproduce) {
  RandomGenerator a(RngStream(9).child(StreamTag::learner, 3).child(StreamTag::fold, 1));
  RandomGenerator b(RngStream(9).child(StreamTag::learner, 3).child(StreamTag::fold, 1));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, DistinctPathsDiffer) {
  std::set<std::uint64_t> keys;
  const RngStream root(1);
  for (std::uint64_t m = 0; m < 20; ++m)
    for (std::uint64_t v = 0; v < 20; ++v) keys.insert(root.child(StreamTag::learner, m).child(StreamTag::fold, v).key());
  keys.insert(root.key());
  keys.insert(RngStream(2).key());
  keys.insert(root.child(StreamTag::refit, 0).key());
  keys.insert(root.child(StreamTag::fold, 0).child(StreamTag::learner, 0).key());
  EXPECT_EQ(keys.size(), 400u + 4u);
}

TEST(Rng, ChildDoesNotDependOnParentConsumption) {
  const RngStream root(5);
  RandomGenerator parent(root);
  for (int i = 0; i < 10; ++i) parent();
  RandomGenerator c1(root.child(StreamTag::test, 1));
  RandomGenerator c2(RngStream(5).child(StreamTag::test, 1));
  EXPECT_EQ(c1(), c2());
}

TEST(Rng, UniformAndBelowRanges) {
  RandomGenerator g(RngStream(11));
  double sum = 0.0;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    const auto k = g.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  EXPECT_NEAR(sum / 70000.0, 0.5, 0.01);
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  EXPECT_EQ(g.below(1), 0u);
}

TEST(Rng, NormalMoments) {
  RandomGenerator g(RngStream(12));
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutation) {
  RandomGenerator g(RngStream(13));
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  g.shuffle(w);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}
