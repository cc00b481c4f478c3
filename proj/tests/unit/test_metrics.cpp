#include <vector>

#include <gtest/gtest.h>

#include "driftvote/metrics.hpp"

using namespace driftvote;

TEST(F1, FrozenValues) {
  const std::vector<std::uint8_t> pred{1, 1, 0, 0};
  const std::vector<std::uint8_t> truth{1, 0, 0, 0};
  const auto r = f1_score(pred, truth);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  EXPECT_FALSE(r.degenerate);
  EXPECT_EQ(r.counts.tp, 1u);
  EXPECT_EQ(r.counts.fp, 1u);
  EXPECT_EQ(r.counts.tn, 2u);
  EXPECT_EQ(r.counts.total(), 4u);
}

TEST(F1, Perfect) {
  const std::vector<std::uint8_t> v{0, 1, 1, 0, 1};
  EXPECT_DOUBLE_EQ(f1_score(v, v).f1, 1.0);
}

TEST(F1, Degenerate) {
  const std::vector<std::uint8_t> zeros(5, 0);
  const std::vector<std::uint8_t> truth{0, 1, 0, 0, 0};
  const auto r = f1_score(zeros, truth);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_TRUE(f1_score(zeros, zeros).degenerate);
}

TEST(F1, LengthMismatch) {
  const std::vector<std::uint8_t> a(3, 0);
  const std::vector<std::uint8_t> b(4, 0);
  EXPECT_THROW(confusion(a, b), InputError);
}

TEST(F1, FromCounts) {
  Confusion c;
  c.tp = 8;
  c.fp = 2;
  c.fn = 8;
  const auto r = f1_from_counts(c);
  EXPECT_DOUBLE_EQ(r.precision, 0.8);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_NEAR(r.f1, 2 * 0.8 * 0.5 / 1.3, 1e-15);
}
