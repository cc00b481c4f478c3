#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftvote/params.hpp"
#include "driftvote/types.hpp"
#include "driftvote/window_model.hpp"

namespace driftvote {

inline constexpr std::size_t kMinBaselineLength = 30;
inline constexpr std::size_t kDefaultBaselineLength = 100;

struct BaselineStats {
  double mu_prime = 0.0;
  double sigma2 = 0.0;  // unbiased
  double sigma = 0.0;
  std::size_t b = 0;
  std::vector<double> samples;
  bool constant = false;
};

/// Mean and unbiased variance of a drift-free prefix. Throws InputError for
/// fewer than 30 samples or non-finite values; a zero variance is accepted
/// and flagged as constant.
BaselineStats collect_baseline(std::span<const Sample> prefix);
BaselineStats collect_baseline(std::span<const double> prefix);

struct GridSpec {
  std::vector<double> delta{};    // ascending
  std::vector<double> lambda{};   // ascending
  std::vector<double> beta{};     // ascending
  std::vector<double> alpha{};    // ascending
  std::vector<std::size_t> l_r{}; // ascending
  std::size_t l_omega = 30;
  std::size_t refine_factor = 10;
  std::size_t kswin_seeds = 10;
  std::size_t budget = 5000;      // replay evaluations across both stages
  /// Length of each zero-alarm replay. The baseline prefix is replayed first
  /// and, when this is longer, followed by a seeded bootstrap resample of it.
  std::size_t replay_length = 0;
  std::uint64_t seed = 0;

  /// Grids from the default bracketing ranges.
  static GridSpec defaults();
  void validate() const;
};

struct CalibrationProfile {
  std::string sensor_type = "temperature";
  EstimatorParams params;
  BaselineStats baseline;
  WindowModel window_model;
  bool degraded = false;
  std::size_t evaluations = 0;

  /// Published hyperparameters and stats for a sensor fixture
  /// ("temperature", "humidity", "pressure"). Baseline samples are empty.
  static CalibrationProfile published(const std::string& sensor);
  void validate() const;
};

/// Coarse-then-fine grid search. Every candidate is replayed through a fresh
/// estimator and must raise no alarm; ties between passing candidates are
/// broken by fixed preferences (largest delta, smallest (lambda, beta),
/// largest alpha then smallest l_r).
CalibrationProfile calibrate(const BaselineStats& baseline, const GridSpec& grid,
                             const std::string& sensor_type = "temperature");

/// The stream used to certify a candidate: the prefix followed by a bootstrap
/// resample up to grid.replay_length.
std::vector<double> replay_stream(const BaselineStats& baseline, const GridSpec& grid);

/// Alarms raised by each estimator when replaying `values` from fresh state.
/// KSWIN is replayed once per seed in [seed0, seed0 + kswin_seeds).
std::size_t adwin_alarms(std::span<const double> values, double delta, std::size_t max_buckets = 5);
std::size_t pht_alarms(std::span<const double> values, double beta, double lambda);
std::size_t kswin_alarms(std::span<const double> values, double alpha, std::size_t l_r, std::size_t l_omega,
                         std::uint64_t seed0, std::size_t seeds);

// Serialization. Both forms carry every field except the raw baseline samples
// unless `with_samples` is set.
std::string to_key_value(const CalibrationProfile& profile, bool with_samples = false);
CalibrationProfile profile_from_key_value(const std::string& text);
nlohmann::json to_json(const CalibrationProfile& profile, bool with_samples = false);
CalibrationProfile profile_from_json(const nlohmann::json& j);

/// Reads a profile from disk; `.json` selects JSON, anything else key-value.
CalibrationProfile load_profile(const std::filesystem::path& path);
void save_profile(const CalibrationProfile& profile, const std::filesystem::path& path, bool with_samples = false);

}  // namespace driftvote
