#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "emomap/numeric.hpp"
#include "emomap/rng.hpp"

using namespace emomap;

TEST(Rng, SplitmixAndFnvReferenceValues) {
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(fnv1a64(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xAF63DC4C8601EC8CULL);
  EXPECT_EQ(derive_seed(7, "x"), splitmix64(7 ^ fnv1a64("x")));
  EXPECT_NE(derive_seed(7, "audit:split:a"), derive_seed(7, "audit:split:b"));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, UniformIsInUnitInterval) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng r(3);
  const int n = 200000;
  double s = 0, q = 0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    q += v * v;
  }
  const double mean = s / n;
  // 5 sigma bounds for the sample mean and variance
  EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(q / n - mean * mean, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Rng, UniformIndexCoversRangeEvenly) {
  Rng r(5);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5.0 * std::sqrt(n / 7.0));
}

TEST(Rng, PermutationIsAPermutation) {
  Rng r(9);
  auto p = r.permutation(100);
  std::set<std::size_t> s(p.begin(), p.end());
  EXPECT_EQ(s.size(), 100u);
  EXPECT_EQ(*s.rbegin(), 99u);
}

TEST(Numeric, CompensatedSumRecoversCancelledTerms) {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1.0);
}

TEST(Numeric, MeanStdIsPopulation) {
  const std::vector<double> xs{1.0, 3.0};
  const auto ms = mean_std(xs);
  EXPECT_DOUBLE_EQ(ms.mean, 2.0);
  EXPECT_DOUBLE_EQ(ms.std, 1.0);
}

TEST(Numeric, NineSignificantDigits) {
  EXPECT_EQ(format_g9(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_g9(2.0), "2");
  EXPECT_EQ(round_g9(round_g9(M_PI)), round_g9(M_PI));
}
