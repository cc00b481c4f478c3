#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "driftvote/page_hinkley.hpp"
#include "support/oracles.hpp"

using namespace driftvote;

namespace {

using Alarm = oracle::PhtAlarm;

std::vector<Alarm> run(PageHinkley pht, const std::vector<double>& xs) {
  std::vector<Alarm> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto v = pht.insert(xs[i]);
    if (v.drifted) out.push_back({i, v.direction});
  }
  return out;
}

std::vector<double> random_walkish(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::uniform_real_distribution<double> jump(-3.0, 3.0);
  std::vector<double> xs(n);
  double level = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 97 == 0) level += jump(rng);
    xs[i] = level + d(rng);
  }
  return xs;
}

}  // namespace

TEST(PageHinkley, MatchesScalarLoop) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> beta_d(0.01, 1.0);
  std::uniform_real_distribution<double> lambda_d(2.0, 60.0);
  std::size_t alarms = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto xs = random_walkish(rng, 400);
    const double beta = beta_d(rng);
    const double lambda = lambda_d(rng);
    const auto expected = oracle::scalar_pht(xs, beta, lambda);
    ASSERT_EQ(run(PageHinkley(beta, lambda), xs), expected) << "stream " << k;
    alarms += expected.size();
  }
  EXPECT_GT(alarms, 1000u);
}

TEST(PageHinkley, DetectsBothDirections) {
  PageHinkley pht(0.1, 20.0);
  for (int i = 0; i < 200; ++i) ASSERT_FALSE(pht.insert(0.0).drifted);
  Verdict v;
  int i = 0;
  while (!(v = pht.insert(5.0)).drifted) ++i;
  EXPECT_EQ(v.direction, Direction::up);
  EXPECT_LT(i, 10);
  EXPECT_EQ(pht.count(), 0u);
  for (int k = 0; k < 200; ++k) ASSERT_FALSE(pht.insert(5.0).drifted);
  while (!(v = pht.insert(0.0)).drifted) {}
  EXPECT_EQ(v.direction, Direction::down);
}

TEST(PageHinkley, TranslationEquivariance) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const auto xs = random_walkish(rng, 1000);
    for (double c : {8.0, -1024.0}) {
      auto shifted = xs;
      for (auto& x : shifted) x += c;
      EXPECT_EQ(run(PageHinkley(0.2, 25.0), xs), run(PageHinkley(0.2, 25.0), shifted));
    }
  }
}

TEST(PageHinkley, NegationSwapsDirection) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const auto xs = random_walkish(rng, 1000);
    auto neg = xs;
    for (auto& x : neg) x = -x;
    auto a = run(PageHinkley(0.2, 25.0), xs);
    const auto b = run(PageHinkley(0.2, 25.0), neg);
    for (auto& alarm : a) alarm.direction = alarm.direction == Direction::up ? Direction::down : Direction::up;
    EXPECT_EQ(a, b);
  }
}

TEST(PageHinkley, ConstantStreamNeverDrifts) {
  PageHinkley pht(0.01, 1.0);
  for (int i = 0; i < 10000; ++i) ASSERT_FALSE(pht.insert(42.0).drifted);
  EXPECT_DOUBLE_EQ(pht.mean(), 42.0);
}

TEST(PageHinkley, RejectsBadInput) {
  EXPECT_THROW(PageHinkley(0.0, 1.0), InputError);
  EXPECT_THROW(PageHinkley(0.1, -1.0), InputError);
  PageHinkley pht(0.1, 1.0);
  EXPECT_THROW(pht.insert(INFINITY), InputError);
  EXPECT_EQ(pht.count(), 0u);
}
