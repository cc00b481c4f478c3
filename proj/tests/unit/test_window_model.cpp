#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "driftvote/trend.hpp"
#include "driftvote/window_model.hpp"

using namespace driftvote;

namespace {

std::vector<WindowModel> fixtures() {
  return {WindowModel::temperature(331, 2000), WindowModel::humidity(331, 2000), WindowModel::pressure(331, 2000)};
}

}  // namespace

TEST(WindowModel, PublishedCoefficients) {
  const auto t = WindowModel::temperature(331, 2000);
  EXPECT_DOUBLE_EQ(t.zeta, 8.782);
  EXPECT_DOUBLE_EQ(t.eta, -5.021);
  EXPECT_DOUBLE_EQ(t.gamma, 1.468);
  const auto p = WindowModel::for_sensor("pressure", 331, 2000);
  EXPECT_DOUBLE_EQ(p.zeta, 7.59);
  EXPECT_DOUBLE_EQ(WindowModel::for_sensor("unknown", 331, 2000).zeta, 8.782);
}

TEST(WindowModel, InversionRecoversGrid) {
  for (const auto& m : fixtures()) {
    for (int k = 0; k < 20; ++k) {
      const double x = k / 19.0;
      EXPECT_NEAR(normalized_window(m.response(x), m), x, 1e-9);
    }
  }
}

TEST(WindowModel, ClampsOutsideRange) {
  const auto m = WindowModel::temperature(331, 2000);
  EXPECT_EQ(normalized_window(m.gamma - 1.0, m), 1.0);
  EXPECT_EQ(normalized_window(m.zeta + m.gamma + 1.0, m), 0.0);
  EXPECT_EQ(adapt_voting_length(0.0, m), 2000u);
  EXPECT_EQ(adapt_voting_length(100.0, m), 331u);
}

TEST(WindowModel, LengthMonotoneInUpsilon) {
  for (const auto& m : fixtures()) {
    std::size_t prev = adapt_voting_length(m.gamma - 0.5, m);
    for (int k = 1; k <= 1000; ++k) {
      const double u = m.gamma - 0.5 + (m.zeta + 1.0) * k / 1000.0;
      const std::size_t l = adapt_voting_length(u, m);
      EXPECT_LE(l, prev);
      EXPECT_GE(l, m.l_min);
      EXPECT_LE(l, m.l_max);
      prev = l;
    }
  }
}

TEST(WindowModel, ScaleConsistent) {
  for (const auto& m : fixtures()) {
    for (double c : {0.5, 2.0, 4.0}) {
      auto scaled = m;
      scaled.zeta *= c;
      scaled.gamma *= c;
      for (int k = 0; k <= 100; ++k) {
        const double u = m.gamma + m.zeta * k / 100.0;
        EXPECT_EQ(adapt_voting_length(u, m), adapt_voting_length(u * c, scaled));
      }
    }
  }
}

TEST(WindowModel, Validation) {
  auto m = WindowModel::temperature(331, 2000);
  EXPECT_NO_THROW(m.validate(330));
  EXPECT_THROW(m.validate(331), InputError);
  m.eta = 0.5;
  EXPECT_THROW(m.validate(100), InputError);
}

TEST(TrendWindow, RelativeMeanChange) {
  TrendWindow w(64);
  std::optional<TrendStats> s;
  for (int i = 0; i < 64; ++i) s = w.push(10.0);
  ASSERT_TRUE(s);
  EXPECT_FALSE(s->upsilon);
  for (int i = 0; i < 63; ++i) EXPECT_FALSE(w.push(11.0));
  s = w.push(11.0);
  ASSERT_TRUE(s && s->upsilon);
  EXPECT_NEAR(*s->upsilon, 0.1, 1e-12);
  EXPECT_NEAR(s->slope, 0.0, 1e-12);
  EXPECT_EQ(w.buffered(), 0u);
}

TEST(TrendWindow, SlopeAndAngle) {
  TrendWindow w(8);
  std::optional<TrendStats> s;
  for (int i = 0; i < 8; ++i) s = w.push(3.0 + i);
  ASSERT_TRUE(s);
  EXPECT_NEAR(s->slope, 1.0, 1e-12);
  EXPECT_NEAR(s->theta_deg, 45.0, 1e-9);
  for (int i = 0; i < 8; ++i) s = w.push(-2.0 * i);
  EXPECT_LT(s->theta_deg, 0.0);
}

TEST(TrendWindow, ZeroMeanIsDegenerate) {
  TrendWindow w(4);
  std::optional<TrendStats> s;
  for (int i = 0; i < 4; ++i) s = w.push(i % 2 ? 1.0 : -1.0);
  for (int i = 0; i < 4; ++i) s = w.push(1.0);
  ASSERT_TRUE(s);
  EXPECT_TRUE(s->degenerate);
}
