#pragma once

#include <cstddef>
#include <cstdint>

namespace driftvote {

/// Hyperparameters for the three estimators of one stream.
struct EstimatorParams {
  double delta = 0.44;            // ADWIN confidence
  std::size_t max_buckets = 5;    // ADWIN triples per level
  double beta = 0.095;            // PHT tolerated change
  double lambda = 480.0;          // PHT alarm threshold
  double alpha = 0.001;           // KSWIN sensitivity
  std::size_t l_r = 300;          // KSWIN recent sub-window
  std::size_t l_omega = 30;       // KSWIN reference sub-window
  std::uint64_t kswin_seed = 0;

  std::size_t kswin_length() const noexcept { return l_r + l_omega; }
  /// Throws InputError when any value is outside its estimator's domain.
  void validate() const;

  bool operator==(const EstimatorParams&) const = default;
};

}  // namespace driftvote
