#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>

namespace driftvote {

inline constexpr std::size_t kEstimatorCount = 3;
enum class EstimatorId : std::size_t { adwin = 0, pht = 1, kswin = 2 };

using VerdictRow = std::array<bool, kEstimatorCount>;
using EstimatorCounts = std::array<std::uint32_t, kEstimatorCount>;

/// Per-estimator verdict sequences. Only the positions of positive verdicts
/// are stored; anything older than `retention` samples is forgotten.
class VerdictHistory {
 public:
  explicit VerdictHistory(std::size_t voting_length, std::size_t retention);

  void append(const VerdictRow& row);

  /// Number of rows appended so far (equal for all estimators).
  std::uint64_t length() const noexcept { return length_; }
  std::size_t voting_length() const noexcept { return voting_length_; }
  /// Retained history never drops below the new length.
  void set_voting_length(std::size_t n);
  std::size_t retention() const noexcept { return retention_; }

  /// Verdict of estimator e at absolute position i (false once forgotten).
  bool at(std::size_t e, std::uint64_t i) const noexcept;
  /// Positive verdicts of each estimator among the last `window` rows.
  EstimatorCounts counts(std::size_t window) const noexcept;

 private:
  std::size_t voting_length_;
  std::size_t retention_;
  std::uint64_t length_ = 0;
  std::array<std::deque<std::uint64_t>, kEstimatorCount> positives_;
};

/// 1 when at least `quorum` estimators are present, 0 otherwise.
int vote(const VerdictRow& presence, std::size_t quorum = 2) noexcept;

/// Equal-weight vote over the last voting_length() rows. Returns 0 while the
/// history is shorter than the voting window.
int vote(const VerdictHistory& history, std::size_t quorum = 2) noexcept;

/// Restricts the vote to a subset of estimators (standalone variants use a
/// single member with quorum 1).
int vote(const VerdictHistory& history, const VerdictRow& members, std::size_t quorum) noexcept;

}  // namespace driftvote
