#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "driftvote/adwin.hpp"
#include "support/oracles.hpp"

using namespace driftvote;

namespace {

std::vector<double> step_stream(std::uint64_t seed, std::size_t n, std::size_t at, double shift) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = d(rng) + (i >= at ? shift : 0.0);
  return out;
}

}  // namespace

TEST(AdwinThreshold, FrozenValue) {
  // m = 25, ln(2 * 100 / 0.002) = ln(1e5)
  const double ln = std::log(1e5);
  const double expected = std::sqrt(2.0 / 25.0 * 1.0 * ln) + 2.0 / 75.0 * ln;
  EXPECT_NEAR(adwin_cut_threshold(50, 50, 1.0, 0.002, 100), expected, 1e-12);
  EXPECT_NEAR(adwin_cut_threshold(50, 50, 1.0, 0.002, 100), 1.26671, 1e-5);
  EXPECT_NEAR(adwin_cut_threshold(150, 50, 0.25, 0.3, 200), 0.437659, 1e-6);
  EXPECT_NEAR(adwin_cut_threshold(100, 100, 1.0, 0.44, 200), 0.6129, 5e-4);
}

TEST(Adwin, FlagsTemperatureStep) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> d(20.32, std::sqrt(1.178));
  Adwin a(0.44);
  for (int i = 0; i < 1000; ++i) a.insert(d(rng));
  int at = -1;
  for (int i = 0; i < 1000 && at < 0; ++i) {
    if (a.insert(d(rng) + 5 * 1.178)) at = i;
  }
  EXPECT_GE(at, 0);
  EXPECT_LT(at, 200);
}

TEST(AdwinThreshold, ShrinksWithSupport) {
  double prev = adwin_cut_threshold(10, 10, 1.0, 0.1, 20);
  for (double n = 20; n <= 640; n *= 2) {
    const double t = adwin_cut_threshold(n, n, 1.0, 0.1, 2 * n);
    EXPECT_LT(t, prev);
    prev = t;
  }
}

TEST(Adwin, RejectsBadParameters) {
  EXPECT_THROW(Adwin(0.0), InputError);
  EXPECT_THROW(Adwin(1.0), InputError);
  EXPECT_THROW(Adwin(0.5, 1), InputError);
  Adwin a(0.5);
  EXPECT_THROW(a.insert(std::nan("")), InputError);
  EXPECT_EQ(a.width(), 0u);
}

TEST(Adwin, BucketInvariants) {
  Adwin a(0.002, 5);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(4.0, 1.0);
  double sum = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const double x = d(rng);
    sum += x;
    ASSERT_FALSE(a.insert(x));
    const auto bs = a.buckets();
    std::uint64_t count = 0;
    std::uint64_t prev = std::numeric_limits<std::uint64_t>::max();
    std::map<std::uint64_t, int> per_size;
    for (const auto& b : bs) {
      EXPECT_LE(b.count, prev);
      EXPECT_EQ(b.count & (b.count - 1), 0u);
      prev = b.count;
      count += b.count;
      ++per_size[b.count];
    }
    for (const auto& [size, k] : per_size) EXPECT_LE(k, 5);
    EXPECT_EQ(count, a.width());
  }
  EXPECT_NEAR(a.total(), sum, 1e-6);
  EXPECT_NEAR(a.mean(), sum / 5000.0, 1e-9);
}

TEST(Adwin, ConstantStreamNeverDrifts) {
  for (double c : {0.0, -3.5, 1e6}) {
    Adwin a(0.99);
    for (int i = 0; i < 3000; ++i) ASSERT_FALSE(a.insert(c));
    EXPECT_EQ(a.width(), 3000u);
  }
}

TEST(Adwin, DropsHistoryOnDetection) {
  Adwin a(0.01);
  const auto xs = step_stream(9, 2000, 1000, 4.0);
  bool seen = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (a.insert(xs[i])) {
      seen = true;
      EXPECT_GE(i, 1000u);
      EXPECT_GT(a.last_dropped(), 0u);
      EXPECT_LE(a.width(), i + 1 - 900);
      break;
    }
  }
  EXPECT_TRUE(seen);
}

TEST(AdwinOracle, FirstDetectionWithinTopBucket) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const double shift = 0.75 + 0.05 * static_cast<double>(seed % 20);
    const auto xs = step_stream(1000 + seed, 2000, 1000, seed % 2 ? shift : -shift);
    Adwin fast(0.002, 5);
    oracle::NaiveAdwin slow(0.002);
    std::optional<std::size_t> fast_at;
    std::optional<std::size_t> slow_at;
    std::uint64_t top = 0;
    for (std::size_t i = 0; i < xs.size() && (!fast_at || !slow_at); ++i) {
      if (!fast_at) {
        const std::uint64_t before = fast.largest_bucket();
        if (fast.insert(xs[i])) {
          fast_at = i;
          top = before;
        }
      }
      if (!slow_at && slow.insert(xs[i])) slow_at = i;
    }
    ASSERT_TRUE(fast_at && slow_at) << "seed " << seed;
    const auto diff = *fast_at > *slow_at ? *fast_at - *slow_at : *slow_at - *fast_at;
    EXPECT_LE(diff, top) << "seed " << seed << " fast " << *fast_at << " slow " << *slow_at;
  }
}
