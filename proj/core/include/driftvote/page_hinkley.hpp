#pragma once

#include <cstdint>

#include "driftvote/types.hpp"

namespace driftvote {

/// Two-sided Page-Hinkley test.
///
/// Keeps one cumulative sum per direction: the increase statistic drifts by
/// -beta/2 and is compared against its running minimum, the decrease statistic
/// drifts by +beta/2 and is compared against its running maximum. The running
/// mean is updated before the deviation is accumulated. All state resets after
/// an alarm.
class PageHinkley {
 public:
  PageHinkley(double beta, double lambda);

  Verdict insert(double x);

  double beta() const noexcept { return beta_; }
  double lambda() const noexcept { return lambda_; }
  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double stddev() const noexcept;
  double up_statistic() const noexcept { return u_up_ - u_up_min_; }
  double down_statistic() const noexcept { return u_down_max_ - u_down_; }

  void reset() noexcept;

 private:
  double beta_;
  double lambda_;
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;  // Welford accumulator for stddev()
  double u_up_ = 0.0;
  double u_up_min_ = 0.0;
  double u_down_ = 0.0;
  double u_down_max_ = 0.0;
};

}  // namespace driftvote
