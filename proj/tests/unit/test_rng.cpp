#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>

#include "teimit/rng.hpp"

using namespace teimit;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, UniformStaysInUnitInterval) {
  Rng r(7);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // Mean of U(0,1) has standard deviation sqrt(1/12/n).
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng r(3);
  const int n = 60000, buckets = 6;
  std::vector<int> count(buckets, 0);
  for (int i = 0; i < n; ++i) {
    const auto v = r.below(buckets);
    ASSERT_LT(v, static_cast<std::uint64_t>(buckets));
    ++count[v];
  }
  const double p = 1.0 / buckets, sigma = std::sqrt(n * p * (1 - p));
  for (int c : count) EXPECT_NEAR(c, n * p, 4.0 * sigma);
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(1, a, b));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_EQ(derive_seed(5, 1, 2), derive_seed(5, 1, 2));
  EXPECT_NE(derive_seed(5, 1, 2), derive_seed(5, 2, 1));
}

TEST(Rng, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64("", 0), 0xcbf29ce484222325ULL);
  const std::string a = "a";
  EXPECT_EQ(fnv1a64(a.data(), a.size()), 0xaf63dc4c8601ec8cULL);
  const std::string foobar = "foobar";
  EXPECT_EQ(fnv1a64(foobar.data(), foobar.size()), 0x85944171f73967e8ULL);
}
