#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftvote/adwin.hpp"
#include "driftvote/kswin.hpp"
#include "driftvote/page_hinkley.hpp"
#include "driftvote/params.hpp"
#include "driftvote/trend.hpp"
#include "driftvote/types.hpp"
#include "driftvote/voting.hpp"
#include "driftvote/window_model.hpp"

namespace driftvote {

struct CalibrationProfile;

/// Mean and support of the stable concept an estimator currently tracks:
/// the ADWIN window, the samples since the last PHT reset, the KSWIN window.
struct ConceptEstimate {
  double mean = 0.0;
  std::uint64_t count = 0;
};
using ConceptRow = std::array<ConceptEstimate, kEstimatorCount>;

/// The three estimators of one stream, fed in lockstep.
class EstimatorBank {
 public:
  explicit EstimatorBank(const EstimatorParams& params);

  /// Inserts x into every estimator and returns their verdicts.
  VerdictRow insert(double x);

  const Adwin& adwin() const noexcept { return adwin_; }
  const PageHinkley& pht() const noexcept { return pht_; }
  const Kswin& kswin() const noexcept { return kswin_; }
  Direction last_pht_direction() const noexcept { return last_direction_; }
  ConceptRow concepts() const;

 private:
  Adwin adwin_;
  PageHinkley pht_;
  Kswin kswin_;
  Direction last_direction_ = Direction::none;
};

/// Bounded record of recent values addressed by absolute sample position.
class ValueHistory {
 public:
  explicit ValueHistory(std::size_t capacity);

  void push(double value);
  std::uint64_t size() const noexcept { return next_; }
  std::uint64_t oldest() const noexcept { return next_ - values_.size(); }
  /// Copies positions [first, last] (inclusive), clipped to what is retained.
  std::vector<double> range(std::uint64_t first, std::uint64_t last) const;

 private:
  std::size_t capacity_;
  std::uint64_t next_ = 0;
  std::deque<double> values_;
};

struct DriftEvent {
  std::string stream_id;
  std::uint64_t start = 0;  // first sample position of the firing window
  std::uint64_t end = 0;    // last sample position (the firing sample)
  int vote = 1;
  EstimatorCounts per_estimator_counts{};
  double z_statistic = 0.0;  // one-sample KS of the window against the baseline
  double mean_offset = 0.0;  // mean(window) - baseline mean
  std::size_t window_length = 0;
};

/// Inclusive range of positions predicted as drifted.
struct DriftSpan {
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  bool operator==(const DriftSpan&) const = default;
};

struct RegimeOptions {
  /// Reference shift, in baseline standard deviations, of the backward CUSUM
  /// that locates the onset of an entered drift.
  double onset_reference = 0.25;
  /// Minimum CUSUM height before an onset or return is located. A released
  /// span with no located return and fully retained values is withdrawn.
  double onset_threshold = 8.0;
  /// A member's concept conforms to the baseline when its mean lies within
  /// release_z standard errors of the baseline mean.
  double release_z = 3.0;
  /// Concepts supported by fewer samples are undecided and never conform.
  std::size_t release_min_support = 30;
};

struct DetectorOptions {
  std::size_t trend_length = 64;
  /// Voting length before the first trend block; defaults to
  /// l_min + (l_max - l_min) / 4.
  std::optional<std::size_t> initial_voting_length;
  VerdictRow members{true, true, true};
  std::size_t quorum = 2;
  RegimeOptions regime;
};

/// Locates the start of a sustained excursion from the baseline inside
/// `window` (oldest first) with a backward two-sided CUSUM. Returns the offset
/// into the window, or nothing when no excursion clears `threshold`.
std::optional<std::size_t> estimate_onset(std::span<const double> window, double mu, double sigma,
                                          double reference, double threshold);

/// Locates the last sample of an excursion that has since returned to the
/// baseline with a two-sided reset CUSUM run backwards from the newest sample.
/// The run with the largest statistic wins. Returns the offset into the
/// window, or nothing when no run clears `threshold`.
std::optional<std::size_t> estimate_return(std::span<const double> window, double mu, double sigma,
                                           double reference, double threshold);

/// Voting, cooldown and drift-regime tracking for one stream. Several stages
/// can share one EstimatorBank, which is how standalone estimator variants
/// run next to the ensemble.
class VotingStage {
 public:
  VotingStage(const WindowModel& model, double baseline_mean, double baseline_sigma,
              const DetectorOptions& options);

  /// Consumes the verdicts for the sample at position `history_values.size()-1`.
  std::optional<DriftEvent> step(const VerdictRow& verdicts, const ConceptRow& concepts,
                                 const ValueHistory& history_values, const std::optional<TrendStats>& trend);

  std::size_t voting_length() const noexcept { return history_.voting_length(); }
  const VerdictHistory& history() const noexcept { return history_; }
  bool drifting() const noexcept { return open_start_.has_value(); }
  std::uint64_t cooldown() const noexcept { return cooldown_; }
  const std::vector<DriftSpan>& closed_spans() const noexcept { return spans_; }
  /// Closed spans plus the open one, if any, ending at `last`.
  std::vector<DriftSpan> spans_through(std::uint64_t last) const;

 private:
  bool entry_vote() const noexcept;
  bool release_vote(const ConceptRow& concepts) const noexcept;

  WindowModel model_;
  double mu_;
  double sigma_;
  DetectorOptions options_;
  VerdictHistory history_;
  std::optional<std::size_t> pending_length_;
  std::uint64_t cooldown_ = 0;
  std::optional<std::uint64_t> open_start_;
  std::uint64_t entry_floor_ = 0;  // verdicts before this position cannot re-enter
  std::vector<DriftSpan> spans_;
};

/// Per-stream ensemble detector.
class Detector {
 public:
  Detector() = default;
  explicit Detector(const CalibrationProfile& profile, DetectorOptions options = {},
                    std::string stream_id = {});

  bool calibrated() const noexcept { return bank_.has_value(); }

  /// Feeds one sample. Throws StateError when uncalibrated. A non-finite value
  /// throws InputError after being counted in skipped(); state is untouched.
  std::optional<DriftEvent> ingest(const Sample& sample);

  const std::string& stream_id() const noexcept { return stream_id_; }
  std::uint64_t ingested() const noexcept { return values_ ? values_->size() : 0; }
  std::uint64_t skipped() const noexcept { return skipped_; }
  const EstimatorBank& estimators() const;
  const VotingStage& voting() const;
  const VerdictRow& last_verdicts() const noexcept { return last_verdicts_; }
  std::optional<TrendStats> last_trend() const noexcept { return last_trend_; }

 private:
  std::string stream_id_;
  std::optional<EstimatorBank> bank_;
  std::optional<TrendWindow> trend_;
  std::optional<ValueHistory> values_;
  std::optional<VotingStage> stage_;
  std::uint64_t skipped_ = 0;
  VerdictRow last_verdicts_{};
  std::optional<TrendStats> last_trend_;
};

}  // namespace driftvote
