#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftvote/calibration.hpp"
#include "driftvote/detector.hpp"
#include "driftvote/metrics.hpp"

namespace driftvote {

enum class Variant { ensemble, adwin, pht, kswin };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
/// Ensemble: all three estimators, quorum 2. Standalone: one member, quorum 1.
DetectorOptions variant_options(Variant v, const RegimeOptions& regime = {});

struct WindowOverride {
  std::optional<double> zeta;
  std::optional<double> eta;
  std::optional<double> gamma;
  std::optional<std::size_t> l_max;
};

struct ExperimentConfig {
  std::vector<std::string> sensors{"temperature"};
  /// Drift magnitudes as multiples of the sensor's sigma^2. Empty selects the
  /// full grid {1/3, 1/2, 1, 2, 3, 4, 5}.
  std::vector<double> q_multiples;
  std::size_t n_runs = 100;
  std::size_t n_slots = 40;
  std::uint64_t seed = 1;  // run r uses seed + r
  std::size_t baseline_length = kDefaultBaselineLength;
  std::vector<Variant> variants{Variant::ensemble, Variant::adwin, Variant::pht, Variant::kswin};
  /// When false the bundled hyperparameters are used and only the baseline
  /// statistics come from the prefix.
  bool calibrate = true;
  GridSpec grid = GridSpec::defaults();
  std::map<std::string, WindowOverride> window_models;
  RegimeOptions regime;
  std::optional<std::filesystem::path> fleet_manifest;
  std::optional<std::filesystem::path> jsonl_path;
  std::optional<std::filesystem::path> csv_path;
  std::size_t threads = 0;  // 0: hardware concurrency
  bool timing = true;       // include wall-clock fields in the report

  std::vector<double> resolved_q_multiples() const;
  void validate() const;
};

/// Relative paths in the document resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Replaces the seed with the DRIFT_SEED environment variable when set.
/// Throws InputError for a value that is not an unsigned integer.
void apply_seed_override(ExperimentConfig& c);

struct RunRecord {
  std::string sensor;
  double q_multiple = 0.0;
  double q = 0.0;
  Variant variant = Variant::ensemble;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  bool degraded = false;
  F1Result metrics;
  std::size_t slots_drifted = 0;
  std::size_t slots_detected = 0;
  EstimatorParams params;
  // Timing; excluded from reproducibility comparisons.
  double init_ms = 0.0;
  double ingest_ns_mean = 0.0;
};

struct Aggregate {
  std::string sensor;
  double q_multiple = 0.0;
  double q = 0.0;
  Variant variant = Variant::ensemble;
  std::size_t runs = 0;
  std::size_t degraded = 0;
  double f1_mean = 0.0;
  double f1_std = 0.0;
  double precision_mean = 0.0;
  double recall_mean = 0.0;
  double slot_detection_rate = 0.0;
};

struct MetricsReport {
  std::vector<RunRecord> runs;
  std::vector<Aggregate> aggregates;
  std::size_t degraded_runs = 0;
  double wall_seconds = 0.0;

  const Aggregate* find(const std::string& sensor, double q_multiple, Variant v) const;
};

/// Generates, calibrates and scores every (sensor, q, run). The prefix used
/// for calibration is excluded from all counts. Runs execute in parallel and
/// are reported in a fixed order.
MetricsReport run_experiment(const ExperimentConfig& config,
                             const std::function<void(std::size_t done, std::size_t total)>& progress = {});

nlohmann::json to_json(const RunRecord& r, bool timing);
void write_jsonl(const MetricsReport& report, std::ostream& os, bool timing);
/// Columns: sensor,q_multiple,q,variant,runs,degraded,f1_mean,f1_std,
/// precision_mean,recall_mean,slot_detection_rate
void write_csv(const MetricsReport& report, std::ostream& os);

}  // namespace driftvote
