#include "driftvote/kswin.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "driftvote/ks.hpp"
#include "driftvote/types.hpp"

namespace driftvote {

double kswin_threshold(double alpha, std::size_t l_r) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("kswin: alpha must lie in (0,1)");
  if (l_r == 0) throw InputError("kswin: l_r must be positive");
  return std::sqrt(-std::log(alpha) / static_cast<double>(l_r));
}

Kswin::Kswin(double alpha, std::size_t l_r, std::size_t l_omega, std::uint64_t seed)
    : alpha_(alpha), l_r_(l_r), l_omega_(l_omega), seed_(seed), threshold_(0.0), rng_(seed) {
  if (l_r < 2) throw InputError("kswin: l_r must be >= 2");
  if (l_omega < 2) throw InputError("kswin: l_omega must be >= 2");
  threshold_ = kswin_threshold(alpha, l_r);
  recent_sorted_.reserve(l_r + 1);
  reference_.reserve(l_omega);
}

void Kswin::reset() {
  window_.clear();
  recent_sorted_.clear();
  rng_.seed(seed_);
  last_distance_ = -1.0;
}

double Kswin::mean() const noexcept {
  if (window_.empty()) return 0.0;
  double s = 0.0;
  for (double v : window_) s += v;
  return s / static_cast<double>(window_.size());
}

double Kswin::stddev() const noexcept {
  if (window_.size() < 2) return 0.0;
  const double mu = mean();
  double ss = 0.0;
  for (double v : window_) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(window_.size() - 1));
}

bool Kswin::insert(double x) {
  require_finite(x, "kswin_insert");
  window_.push_back(x);
  recent_sorted_.insert(std::upper_bound(recent_sorted_.begin(), recent_sorted_.end(), x), x);
  if (recent_sorted_.size() > l_r_) {
    // The value that just slid out of the recent sample.
    const double leaving = window_[window_.size() - 1 - l_r_];
    recent_sorted_.erase(std::lower_bound(recent_sorted_.begin(), recent_sorted_.end(), leaving));
  }
  if (window_.size() > capacity()) window_.pop_front();
  if (window_.size() < capacity()) return false;

  const auto history_end = window_.begin() + static_cast<std::ptrdiff_t>(window_.size() - l_r_);
  reference_.clear();
  std::sample(window_.begin(), history_end, std::back_inserter(reference_), l_omega_, rng_);
  std::sort(reference_.begin(), reference_.end());
  last_distance_ = ks_two_sample_distance_sorted(reference_, recent_sorted_);
  if (last_distance_ > threshold_) {
    while (window_.size() > l_r_) window_.pop_front();
    return true;
  }
  return false;
}

}  // namespace driftvote
