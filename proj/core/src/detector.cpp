#include "driftvote/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "driftvote/calibration.hpp"
#include "driftvote/ks.hpp"

namespace driftvote {

EstimatorBank::EstimatorBank(const EstimatorParams& params)
    : adwin_(params.delta, params.max_buckets),
      pht_(params.beta, params.lambda),
      kswin_(params.alpha, params.l_r, params.l_omega, params.kswin_seed) {}

VerdictRow EstimatorBank::insert(double x) {
  require_finite(x, "detector_ingest");
  VerdictRow row{};
  row[0] = adwin_.insert(x);
  const Verdict p = pht_.insert(x);
  row[1] = p.drifted;
  last_direction_ = p.direction;
  row[2] = kswin_.insert(x);
  return row;
}

ConceptRow EstimatorBank::concepts() const {
  return {ConceptEstimate{adwin_.mean(), adwin_.width()}, ConceptEstimate{pht_.mean(), pht_.count()},
          ConceptEstimate{kswin_.mean(), kswin_.size()}};
}

ValueHistory::ValueHistory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("value history: capacity must be positive");
}

void ValueHistory::push(double value) {
  values_.push_back(value);
  if (values_.size() > capacity_) values_.pop_front();
  ++next_;
}

std::vector<double> ValueHistory::range(std::uint64_t first, std::uint64_t last) const {
  first = std::max(first, oldest());
  if (next_ == 0 || last < first) return {};
  last = std::min(last, next_ - 1);
  const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(first - oldest());
  const auto end = values_.begin() + static_cast<std::ptrdiff_t>(last - oldest() + 1);
  return {begin, end};
}

std::optional<std::size_t> estimate_onset(std::span<const double> window, double mu, double sigma,
                                          double reference, double threshold) {
  if (window.empty() || !(sigma > 0.0)) return std::nullopt;
  double up = 0.0;
  double down = 0.0;
  double best = threshold;
  std::optional<std::size_t> onset;
  for (std::size_t k = window.size(); k-- > 0;) {
    const double z = (window[k] - mu) / sigma;
    up += z - reference;
    down += -z - reference;
    if (up > best) {
      best = up;
      onset = k;
    }
    if (down > best) {
      best = down;
      onset = k;
    }
  }
  return onset;
}

std::optional<std::size_t> estimate_return(std::span<const double> window, double mu, double sigma,
                                           double reference, double threshold) {
  if (window.empty() || !(sigma > 0.0)) return std::nullopt;
  double up = 0.0;
  double down = 0.0;
  std::size_t up_from = window.size() - 1;
  std::size_t down_from = window.size() - 1;
  double best = threshold;
  std::optional<std::size_t> last;
  for (std::size_t k = window.size(); k-- > 0;) {
    const double z = (window[k] - mu) / sigma;
    if (up == 0.0) up_from = k;
    if (down == 0.0) down_from = k;
    up = std::max(0.0, up + z - reference);
    down = std::max(0.0, down - z - reference);
    if (up > best) {
      best = up;
      last = up_from;
    }
    if (down > best) {
      best = down;
      last = down_from;
    }
  }
  return last;
}

namespace {

std::size_t default_initial_length(const WindowModel& model) {
  return model.l_min + (model.l_max - model.l_min) / 4;
}

}  // namespace

VotingStage::VotingStage(const WindowModel& model, double baseline_mean, double baseline_sigma,
                         const DetectorOptions& options)
    : model_(model),
      mu_(baseline_mean),
      sigma_(baseline_sigma),
      options_(options),
      history_(options.initial_voting_length.value_or(default_initial_length(model)), model.l_max) {
  if (!(baseline_sigma > 0.0) || !std::isfinite(baseline_sigma)) {
    throw InputError("detector: baseline sigma must be positive");
  }
  if (options.quorum == 0) throw InputError("detector: quorum must be positive");
}

bool VotingStage::entry_vote() const noexcept {
  // Only verdicts after the last release may start a new drift.
  const std::uint64_t now = history_.length();
  const std::uint64_t window_floor = now > history_.voting_length() ? now - history_.voting_length() : 0;
  const std::uint64_t first = std::max(window_floor, entry_floor_);
  if (now < history_.voting_length()) return false;
  const auto counts = history_.counts(static_cast<std::size_t>(now - first));
  VerdictRow presence{};
  for (std::size_t e = 0; e < kEstimatorCount; ++e) presence[e] = options_.members[e] && counts[e] > 0;
  return vote(presence, options_.quorum) == 1;
}

bool VotingStage::release_vote(const ConceptRow& concepts) const noexcept {
  VerdictRow conforming{};
  for (std::size_t e = 0; e < kEstimatorCount; ++e) {
    const auto& c = concepts[e];
    if (!options_.members[e] || c.count < options_.regime.release_min_support) continue;
    const double se = sigma_ / std::sqrt(static_cast<double>(c.count));
    conforming[e] = std::abs(c.mean - mu_) <= options_.regime.release_z * se;
  }
  return vote(conforming, options_.quorum) == 1;
}

std::optional<DriftEvent> VotingStage::step(const VerdictRow& verdicts, const ConceptRow& concepts,
                                            const ValueHistory& values, const std::optional<TrendStats>& trend) {
  if (pending_length_) {
    history_.set_voting_length(*pending_length_);
    pending_length_.reset();
  }
  history_.append(verdicts);
  const std::uint64_t now = history_.length() - 1;

  if (trend && trend->upsilon && !trend->degenerate) {
    pending_length_ = adapt_voting_length(*trend->upsilon, model_);
  }
  if (open_start_ && release_vote(concepts)) {
    const std::uint64_t first = std::max(*open_start_, values.oldest());
    const auto window = values.range(first, now);
    const auto back = estimate_return(window, mu_, sigma_, options_.regime.onset_reference,
                                      options_.regime.onset_threshold);
    if (back) {
      spans_.push_back({*open_start_, std::max(first + *back, *open_start_)});
    } else if (first > *open_start_) {
      spans_.push_back({*open_start_, now - 1});
    }
    open_start_.reset();
    entry_floor_ = now;
  }

  const std::size_t lv = history_.voting_length();
  if (!open_start_ && entry_vote()) {
    const std::uint64_t first = std::max<std::uint64_t>(now + 1 - lv, entry_floor_);
    const auto window = values.range(first, now);
    const auto onset = estimate_onset(window, mu_, sigma_, options_.regime.onset_reference,
                                      options_.regime.onset_threshold);
    open_start_ = onset ? first + *onset : now;
    if (!spans_.empty()) open_start_ = std::max(*open_start_, spans_.back().end + 1);
  }

  if (cooldown_ > 0) {
    --cooldown_;
    return std::nullopt;
  }
  if (vote(history_, options_.members, options_.quorum) == 0) return std::nullopt;

  DriftEvent ev;
  ev.end = now;
  ev.start = now + 1 - lv;
  ev.window_length = lv;
  ev.per_estimator_counts = history_.counts(lv);
  const auto window = values.range(ev.start, ev.end);
  ev.z_statistic = one_sample_ks_normal(window, mu_, sigma_);
  ev.mean_offset = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size()) - mu_;
  cooldown_ = lv;
  return ev;
}

std::vector<DriftSpan> VotingStage::spans_through(std::uint64_t last) const {
  auto out = spans_;
  if (open_start_ && *open_start_ <= last) out.push_back({*open_start_, last});
  return out;
}

Detector::Detector(const CalibrationProfile& profile, DetectorOptions options, std::string stream_id)
    : stream_id_(std::move(stream_id)) {
  profile.validate();
  profile.window_model.validate(profile.params.kswin_length());
  bank_.emplace(profile.params);
  trend_.emplace(options.trend_length);
  values_.emplace(std::max(profile.window_model.l_max, options.trend_length));
  stage_.emplace(profile.window_model, profile.baseline.mu_prime, profile.baseline.sigma, options);
  if (stream_id_.empty()) stream_id_ = profile.sensor_type;
}

const EstimatorBank& Detector::estimators() const {
  if (!bank_) throw StateError("detector: not calibrated");
  return *bank_;
}

const VotingStage& Detector::voting() const {
  if (!stage_) throw StateError("detector: not calibrated");
  return *stage_;
}

std::optional<DriftEvent> Detector::ingest(const Sample& sample) {
  if (!bank_) throw StateError("detector: ingest before calibration");
  if (!std::isfinite(sample.value)) {
    ++skipped_;
    throw InputError("detector_ingest: non-finite value skipped");
  }
  last_verdicts_ = bank_->insert(sample.value);
  values_->push(sample.value);
  last_trend_ = trend_->push(sample.value);
  auto ev = stage_->step(last_verdicts_, bank_->concepts(), *values_, last_trend_);
  if (ev) ev->stream_id = stream_id_;
  return ev;
}

}  // namespace driftvote
