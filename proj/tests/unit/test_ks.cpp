#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "driftvote/ks.hpp"
#include "driftvote/kswin.hpp"
#include "support/oracles.hpp"

using namespace driftvote;

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::uniform_int_distribution<int> u(0, 6);
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? u(rng) : d(rng);
  return v;
}

}  // namespace

TEST(KsDistance, FrozenExample) {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{3, 4, 5, 6};
  EXPECT_DOUBLE_EQ(ks_two_sample_distance(a, b), 0.5);
  const std::vector<double> c{10, 11};
  EXPECT_DOUBLE_EQ(ks_two_sample_distance(a, c), 1.0);
}

TEST(KsDistance, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> len(1, 50);
  for (int k = 0; k < 1000; ++k) {
    const bool ties = k % 2 == 0;
    const auto a = draw(rng, len(rng), ties);
    const auto b = draw(rng, len(rng), ties);
    ASSERT_EQ(ks_two_sample_distance(a, b), oracle::brute_ks(a, b)) << "pair " << k;
  }
}

TEST(KsDistance, SymmetricBoundedAndZeroOnSelf) {
  std::mt19937_64 rng(22);
  for (int k = 0; k < 300; ++k) {
    const auto a = draw(rng, 1 + k % 40, k % 3 == 0);
    const auto b = draw(rng, 1 + (k * 7) % 45, k % 3 == 0);
    const double d = ks_two_sample_distance(a, b);
    EXPECT_EQ(d, ks_two_sample_distance(b, a));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(ks_two_sample_distance(a, a), 0.0);
  }
}

TEST(KsDistance, RejectsBadInput) {
  const std::vector<double> a{1.0};
  const std::vector<double> empty;
  const std::vector<double> bad{NAN};
  EXPECT_THROW(ks_two_sample_distance(a, empty), InputError);
  EXPECT_THROW(ks_two_sample_distance(a, bad), InputError);
}

TEST(OneSampleKs, NormalCdfAndStatistic) {
  EXPECT_NEAR(normal_cdf(0.0, 0.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.959963984540054, 0.0, 1.0), 0.975, 1e-12);
  const std::vector<double> one{0.0};
  EXPECT_NEAR(one_sample_ks_normal(one, 0.0, 1.0), 0.5, 1e-15);
  EXPECT_THROW(one_sample_ks_normal(one, 0.0, 0.0), InputError);
  EXPECT_NEAR(kolmogorov_critical_value(0.05, 100), 0.135810, 1e-5);
}

TEST(Kswin, FrozenThreshold) {
  EXPECT_NEAR(kswin_threshold(0.1, 100), 0.151743, 1e-6);
  EXPECT_NEAR(kswin_threshold(0.001, 300), std::sqrt(std::log(1000.0) / 300.0), 1e-15);
}

TEST(Kswin, ConstantStreamNeverDrifts) {
  Kswin k(0.5, 100, 30, 4);
  for (int i = 0; i < 5000; ++i) ASSERT_FALSE(k.insert(7.0));
  EXPECT_EQ(k.last_distance(), 0.0);
}

TEST(Kswin, DeterministicPerSeed) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> xs(6000);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = d(rng) + (i > 3000 ? 1.0 : 0.0);
  auto detections = [&](std::uint64_t seed) {
    Kswin k(0.01, 100, 30, seed);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (k.insert(xs[i])) out.push_back(i);
    }
    return out;
  };
  EXPECT_EQ(detections(11), detections(11));
  EXPECT_FALSE(detections(11).empty());
}

TEST(Kswin, KeepsRecentSampleAfterDetection) {
  Kswin k(0.01, 50, 30, 1);
  for (int i = 0; i < 80; ++i) k.insert(0.0);
  bool fired = false;
  for (int i = 0; i < 80 && !fired; ++i) fired = k.insert(10.0);
  ASSERT_TRUE(fired);
  EXPECT_EQ(k.size(), 50u);
}
