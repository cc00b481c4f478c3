#include "driftvote/voting.hpp"

#include <algorithm>

#include "driftvote/types.hpp"

namespace driftvote {

VerdictHistory::VerdictHistory(std::size_t voting_length, std::size_t retention)
    : voting_length_(voting_length), retention_(std::max(retention, voting_length)) {
  if (voting_length == 0) throw InputError("verdict history: voting length must be positive");
}

void VerdictHistory::set_voting_length(std::size_t n) {
  if (n == 0) throw InputError("verdict history: voting length must be positive");
  voting_length_ = n;
  retention_ = std::max(retention_, n);
}

void VerdictHistory::append(const VerdictRow& row) {
  for (std::size_t e = 0; e < kEstimatorCount; ++e) {
    auto& pos = positives_[e];
    if (row[e]) pos.push_back(length_);
    while (!pos.empty() && pos.front() + retention_ <= length_) pos.pop_front();
  }
  ++length_;
}

bool VerdictHistory::at(std::size_t e, std::uint64_t i) const noexcept {
  const auto& pos = positives_[e];
  return std::binary_search(pos.begin(), pos.end(), i);
}

EstimatorCounts VerdictHistory::counts(std::size_t window) const noexcept {
  EstimatorCounts out{};
  const std::uint64_t first = length_ > window ? length_ - window : 0;
  for (std::size_t e = 0; e < kEstimatorCount; ++e) {
    const auto& pos = positives_[e];
    out[e] = static_cast<std::uint32_t>(pos.end() - std::lower_bound(pos.begin(), pos.end(), first));
  }
  return out;
}

int vote(const VerdictRow& presence, std::size_t quorum) noexcept {
  const auto present = static_cast<std::size_t>(std::count(presence.begin(), presence.end(), true));
  return present >= quorum ? 1 : 0;
}

int vote(const VerdictHistory& history, const VerdictRow& members, std::size_t quorum) noexcept {
  if (history.length() < history.voting_length()) return 0;
  const auto counts = history.counts(history.voting_length());
  VerdictRow presence{};
  for (std::size_t e = 0; e < kEstimatorCount; ++e) presence[e] = members[e] && counts[e] > 0;
  return vote(presence, quorum);
}

int vote(const VerdictHistory& history, std::size_t quorum) noexcept {
  return vote(history, VerdictRow{true, true, true}, quorum);
}

}  // namespace driftvote
