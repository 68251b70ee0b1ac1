#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "test_util.hpp"

using namespace superlearn;
using testutil::error_id;

TEST(Dataset, BuildsFromRows) {
  const Dataset d = make_dataset({{1, 2}, {3, 4}, {5, 6}}, {1, 2, 3});
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.p(), 2);
  EXPECT_EQ(d.feature_names(), (std::vector<std::string>{"x1", "x2"}));
  EXPECT_EQ(d.x()(2, 1), 6.0);
}

TEST(Dataset, RejectsNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(error_id([&] { make_dataset({{1, 2}, {nan, 4}, {5, 6}}, {1, 2, 3}); }), "NonFinite");
  EXPECT_EQ(error_id([&] { make_dataset({{1, 2}, {3, 4}}, {1, INFINITY}); }), "NonFinite");
}

TEST(Dataset, RejectsLengthMismatch) {
  EXPECT_EQ(error_id([] { make_dataset({{1}, {2}, {3}}, {1, 2, 3, 4}); }), "LengthMismatch");
  EXPECT_EQ(error_id([] { make_dataset({{1, 2}, {3}}, {1, 2}); }), "LengthMismatch");
}

TEST(Dataset, SubsetKeepsOrder) {
  const Dataset d = make_dataset({{1}, {2}, {3}, {4}}, {10, 20, 30, 40});
  const Dataset s = d.subset({3, 1});
  EXPECT_EQ(s.y()(0), 40.0);
  EXPECT_EQ(s.x()(1, 0), 2.0);
}

static std::multiset<std::size_t> size_multiset(const FoldAssignment& f) {
  const auto sizes = f.sizes();
  return {sizes.begin(), sizes.end()};
}

TEST(Folds, EvenSplit) {
  const FoldAssignment f = make_folds(10, 5, RngStream(7));
  EXPECT_EQ(size_multiset(f), (std::multiset<std::size_t>{2, 2, 2, 2, 2}));
}

TEST(Folds, UnevenSplit) {
  const FoldAssignment f = make_folds(11, 5, RngStream(7));
  EXPECT_EQ(size_multiset(f), (std::multiset<std::size_t>{3, 2, 2, 2, 2}));
}

TEST(Folds, LeaveOneOut) {
  const FoldAssignment f = make_folds(6, 6, RngStream(7));
  for (std::size_t v = 0; v < 6; ++v) EXPECT_EQ(f.held_out(v).size(), 1u);
}

TEST(Folds, BadFoldCount) {
  EXPECT_EQ(error_id([] { make_folds(10, 1, RngStream(1)); }), "BadFoldCount");
  EXPECT_EQ(error_id([] { make_folds(10, 11, RngStream(1)); }), "BadFoldCount");
}

TEST(Folds, PartitionPropertiesOverRandomSizes) {
  RandomGenerator gen(RngStream(3));
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + gen.below(200);
    const std::size_t v = 2 + gen.below(n - 1);
    const FoldAssignment f = make_folds(n, v, RngStream(trial));
    std::vector<int> seen(n, 0);
    for (std::size_t k = 0; k < v; ++k) {
      const auto held = f.held_out(k);
      const auto train = f.training(k);
      EXPECT_EQ(held.size() + train.size(), n);
      for (Index i : held) ++seen[static_cast<std::size_t>(i)];
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    const auto sizes = f.sizes();
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    EXPECT_GE(*lo, 1u);
    EXPECT_LE(*hi - *lo, 1u);
  }
}

TEST(Folds, DeterministicGivenStream) {
  const RngStream s = RngStream(42).child(StreamTag::folds, 0);
  EXPECT_EQ(make_folds(97, 10, s), make_folds(97, 10, s));
  EXPECT_NE(make_folds(97, 10, s).assignment(), make_folds(97, 10, RngStream(43).child(StreamTag::folds, 0)).assignment());
}

TEST(Folds, ConstructorValidates) {
  EXPECT_EQ(error_id([] { FoldAssignment({0, 0, 0, 1}, 2); }), "ConfigError");
  EXPECT_EQ(error_id([] { FoldAssignment({0, 2, 1}, 2); }), "ConfigError");
  EXPECT_NO_THROW(FoldAssignment({0, 1, 0}, 2));
}

static Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(Loss, Examples) {
  EXPECT_EQ(mean_loss({}, vec({1, 2}), vec({1, 2})), 0.0);
  EXPECT_EQ(mean_loss({}, vec({0, 0}), vec({1, 1})), 1.0);
  EXPECT_EQ(mean_loss({}, vec({0, 2}), vec({1, 1})), 1.0);
  EXPECT_EQ(error_id([] { mean_loss({}, vec({0, 2}), vec({1})); }), "LengthMismatch");
}

TEST(Loss, ZeroOnlyWhenEqual) {
  const Vector y = testutil::random_vector(20, 5);
  Vector z = y;
  EXPECT_EQ(mean_loss({}, y, z), 0.0);
  z(7) += 1e-9;
  EXPECT_GT(mean_loss({}, y, z), 0.0);
}

TEST(Loss, Parse) {
  EXPECT_EQ(parse_loss("squared_error").kind, LossKind::squared_error);
  EXPECT_EQ(error_id([] { parse_loss("absolute"); }), "ConfigError");
}

TEST(Parallel, MatchesSerialAndRethrows) {
  std::vector<double> serial(500), parallel(500);
  auto body = [](std::vector<double>& out) {
    return [&out](std::size_t i) { out[i] = std::sqrt(static_cast<double>(i)) * 3.0; };
  };
  parallel_for(500, 1, body(serial));
  parallel_for(500, 4, body(parallel));
  EXPECT_EQ(serial, parallel);
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 13 || i == 40) throw std::runtime_error(std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "13");
  }
}
