#include "driftvote/adwin.hpp"

#include <algorithm>
#include <cmath>

#include "driftvote/types.hpp"

namespace driftvote {

double adwin_cut_threshold(double hist, double recent, double variance, double delta, double width) noexcept {
  const double m = 1.0 / (1.0 / hist + 1.0 / recent);
  const double log_term = std::log(2.0 * width / delta);
  return std::sqrt((2.0 / m) * variance * log_term) + (2.0 / (3.0 * m)) * log_term;
}

Adwin::Adwin(double delta, std::size_t max_buckets) : delta_(delta), max_buckets_(max_buckets) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InputError("adwin: delta must lie in (0,1)");
  }
  if (max_buckets < 2) {
    throw InputError("adwin: at least two buckets per level required");
  }
}

double Adwin::mean() const noexcept {
  return total_count_ == 0 ? 0.0 : total_sum_ / static_cast<double>(total_count_);
}

double Adwin::variance() const noexcept {
  if (total_count_ == 0) return 0.0;
  const double n = static_cast<double>(total_count_);
  const double mu = total_sum_ / n;
  return std::max(0.0, total_sum_sq_ / n - mu * mu);
}

double Adwin::stddev() const noexcept { return std::sqrt(variance()); }

std::size_t Adwin::bucket_count() const noexcept {
  std::size_t n = 0;
  for (const auto& level : levels_) n += level.size();
  return n;
}

std::uint64_t Adwin::largest_bucket() const noexcept {
  for (auto it = levels_.rbegin(); it != levels_.rend(); ++it) {
    if (!it->empty()) return it->front().count;
  }
  return 0;
}

std::vector<Adwin::Bucket> Adwin::buckets() const {
  std::vector<Bucket> out;
  out.reserve(bucket_count());
  for (auto it = levels_.rbegin(); it != levels_.rend(); ++it) {
    out.insert(out.end(), it->begin(), it->end());
  }
  return out;
}

void Adwin::reset() {
  levels_.clear();
  total_count_ = 0;
  total_sum_ = 0.0;
  total_sum_sq_ = 0.0;
  last_dropped_ = 0;
}

bool Adwin::insert(double x) {
  require_finite(x, "adwin_insert");
  if (levels_.empty()) levels_.emplace_back();
  levels_.front().push_back(Bucket{1, x, x * x});
  ++total_count_;
  total_sum_ += x;
  total_sum_sq_ += x * x;
  compress();
  if (total_count_ < 2) return false;
  return detect_and_shrink();
}

void Adwin::compress() {
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (levels_[k].size() <= max_buckets_) break;
    Bucket merged = levels_[k].front();
    levels_[k].pop_front();
    const Bucket& second = levels_[k].front();
    merged.count += second.count;
    merged.sum += second.sum;
    merged.sum_sq += second.sum_sq;
    levels_[k].pop_front();
    if (k + 1 == levels_.size()) levels_.emplace_back();
    levels_[k + 1].push_back(merged);
  }
}

void Adwin::drop_oldest() {
  while (!levels_.empty() && levels_.back().empty()) levels_.pop_back();
  if (levels_.empty()) return;
  const Bucket b = levels_.back().front();
  levels_.back().pop_front();
  total_count_ -= b.count;
  total_sum_ -= b.sum;
  total_sum_sq_ -= b.sum_sq;
  if (total_count_ == 0) {
    total_sum_ = 0.0;
    total_sum_sq_ = 0.0;
  }
  while (!levels_.empty() && levels_.back().empty()) levels_.pop_back();
}

bool Adwin::detect_and_shrink() {
  bool detected = false;
  last_dropped_ = 0;
  for (;;) {
    if (total_count_ < 2) break;
    const double width = static_cast<double>(total_count_);
    const double var = variance();
    double hist_n = 0.0;
    double hist_sum = 0.0;
    std::size_t seen = 0;
    std::size_t cut_after = 0;  // number of oldest buckets to drop, 0 = none
    const std::size_t total_buckets = bucket_count();
    for (auto lvl = levels_.rbegin(); lvl != levels_.rend(); ++lvl) {
      for (const Bucket& b : *lvl) {
        ++seen;
        if (seen == total_buckets) break;
        hist_n += static_cast<double>(b.count);
        hist_sum += b.sum;
        const double new_n = width - hist_n;
        const double phi = std::abs(hist_sum / hist_n - (total_sum_ - hist_sum) / new_n);
        if (phi > adwin_cut_threshold(hist_n, new_n, var, delta_, width)) {
          cut_after = seen;
        }
      }
    }
    if (cut_after == 0) break;
    detected = true;
    const std::uint64_t before = total_count_;
    for (std::size_t i = 0; i < cut_after; ++i) drop_oldest();
    last_dropped_ += before - total_count_;
  }
  return detected;
}

}  // namespace driftvote
