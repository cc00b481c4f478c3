#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "driftvote/types.hpp"

namespace driftvote {

/// sqrt(-ln(alpha) / l_r), the KSWIN rejection threshold.
double kswin_threshold(double alpha, std::size_t l_r);

/// Kolmogorov-Smirnov windowing.
///
/// Holds the last l_omega + l_r values. Once full, the newest l_r values form
/// the recent sample and l_omega values drawn without replacement from the
/// older part form the reference sample. A two-sample KS distance above the
/// threshold is a drift, after which only the recent sample is kept.
class Kswin {
 public:
  Kswin(double alpha, std::size_t l_r, std::size_t l_omega = 30, std::uint64_t seed = 0);

  bool insert(double x);

  double alpha() const noexcept { return alpha_; }
  std::size_t l_r() const noexcept { return l_r_; }
  std::size_t l_omega() const noexcept { return l_omega_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t capacity() const noexcept { return l_r_ + l_omega_; }
  std::size_t size() const noexcept { return window_.size(); }
  /// Distance from the most recent evaluated test, negative before the first.
  double last_distance() const noexcept { return last_distance_; }

  double mean() const noexcept;
  double stddev() const noexcept;

  void reset();

 private:
  double alpha_;
  std::size_t l_r_;
  std::size_t l_omega_;
  std::uint64_t seed_;
  double threshold_;
  std::mt19937_64 rng_;
  std::deque<double> window_;
  std::vector<double> recent_sorted_;
  std::vector<double> reference_;
  double last_distance_ = -1.0;
};

}  // namespace driftvote
