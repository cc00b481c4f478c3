#include "driftvote/trend.hpp"

#include <cmath>
#include <numbers>

#include "driftvote/types.hpp"

namespace driftvote {

namespace {
constexpr double kUpsilonGuard = 1e-9;
}

TrendWindow::TrendWindow(std::size_t length) : length_(length) {
  if (length < 2) throw InputError("trend window: length must be >= 2");
  buffer_.reserve(length);
}

std::optional<TrendStats> TrendWindow::push(double value) {
  buffer_.push_back(value);
  if (buffer_.size() < length_) return std::nullopt;

  const double n = static_cast<double>(length_);
  const double t_mean = (n - 1.0) / 2.0;
  double y_sum = 0.0;
  for (double y : buffer_) y_sum += y;
  const double y_mean = y_sum / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    sxy += dt * (buffer_[i] - y_mean);
    sxx += dt * dt;
  }

  TrendStats stats;
  stats.slope = sxy / sxx;
  stats.theta_deg = std::atan(stats.slope) * 180.0 / std::numbers::pi;
  stats.mean = y_mean;
  if (prev_mean_) {
    double denom = std::abs(*prev_mean_);
    if (denom < kUpsilonGuard) {
      denom = kUpsilonGuard;
      stats.degenerate = true;
    }
    stats.upsilon = std::abs(y_mean - *prev_mean_) / denom;
  }
  prev_mean_ = y_mean;
  buffer_.clear();
  return stats;
}

}  // namespace driftvote
