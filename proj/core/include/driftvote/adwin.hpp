#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "driftvote/types.hpp"

namespace driftvote {

/// Cut threshold for one ADWIN window split.
///
/// `hist` and `recent` are the two sub-window lengths, `variance` the variance
/// of the whole window and `width` its length. Uses m = 1/(1/L_hist + 1/L_new)
/// and delta' = delta / width.
double adwin_cut_threshold(double hist, double recent, double variance, double delta, double width) noexcept;

/// Adaptive windowing over an exponential histogram.
///
/// Buckets hold (count, sum, sum of squares) triples. Level k holds buckets of
/// 2^k samples and at most `max_buckets` of them; overflow merges the two
/// oldest into level k+1. Every bucket boundary is tested as a cut on each
/// insert and a successful cut drops everything older than it.
class Adwin {
 public:
  struct Bucket {
    std::uint64_t count = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };

  explicit Adwin(double delta, std::size_t max_buckets = 5);

  /// Appends x and tests all cuts. Throws InputError on non-finite x.
  bool insert(double x);

  double delta() const noexcept { return delta_; }
  std::size_t max_buckets() const noexcept { return max_buckets_; }
  std::uint64_t width() const noexcept { return total_count_; }
  double total() const noexcept { return total_sum_; }
  double mean() const noexcept;
  double variance() const noexcept;
  double stddev() const noexcept;

  std::size_t bucket_count() const noexcept;
  /// Sample count of the oldest (largest) bucket, 0 when empty.
  std::uint64_t largest_bucket() const noexcept;
  /// Buckets ordered oldest to newest.
  std::vector<Bucket> buckets() const;
  /// Length of the window discarded by the most recent detection.
  std::uint64_t last_dropped() const noexcept { return last_dropped_; }

  void reset();

 private:
  void compress();
  bool detect_and_shrink();
  void drop_oldest();

  double delta_;
  std::size_t max_buckets_;
  // levels_[k] holds buckets of 2^k samples, front() is the oldest.
  std::vector<std::deque<Bucket>> levels_;
  std::uint64_t total_count_ = 0;
  double total_sum_ = 0.0;
  double total_sum_sq_ = 0.0;
  std::uint64_t last_dropped_ = 0;
};

}  // namespace driftvote
