#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace driftvote {

struct TrendStats {
  double slope = 0.0;
  double theta_deg = 0.0;
  double mean = 0.0;
  /// |mean - previous mean| / |previous mean|; absent for the first block.
  std::optional<double> upsilon;
  /// Previous mean was within 1e-9 of zero and the ratio used the guard.
  bool degenerate = false;
};

/// Non-overlapping block of the last `length` values. Every full block yields
/// a least-squares slope against the sample ordinal and the relative change of
/// its mean against the previous block, then empties.
class TrendWindow {
 public:
  explicit TrendWindow(std::size_t length = 64);

  std::optional<TrendStats> push(double value);

  std::size_t length() const noexcept { return length_; }
  std::size_t buffered() const noexcept { return buffer_.size(); }
  std::optional<double> previous_mean() const noexcept { return prev_mean_; }

 private:
  std::size_t length_;
  std::vector<double> buffer_;
  std::optional<double> prev_mean_;
};

}  // namespace driftvote
