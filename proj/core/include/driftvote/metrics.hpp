#pragma once

#include <cstdint>
#include <span>

#include "driftvote/types.hpp"

namespace driftvote {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
};

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when precision or recall is 0/0; all three are then reported as 0
  /// unless the other ratio is defined.
  bool degenerate = false;
  Confusion counts;
};

Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);
F1Result f1_from_counts(const Confusion& c) noexcept;

/// Per-sample scores on the positive class. Throws InputError on length
/// mismatch.
F1Result f1_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

}  // namespace driftvote
