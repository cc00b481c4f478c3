#pragma once

#include <cstddef>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "driftvote/calibration.hpp"

namespace driftvote {

struct BenchConfig {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
  /// A drift slot of this length is injected every `drift_every` samples so
  /// the voting path is exercised; 0 disables.
  std::size_t drift_every = 5000;
  std::size_t drift_length = 1000;
};

struct BenchReport {
  std::size_t samples = 0;
  std::size_t events = 0;
  double init_ms = 0.0;
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p99_us = 0.0;
  double max_us = 0.0;
  double samples_per_second = 0.0;
  double total_seconds = 0.0;
};

/// Times Detector construction and per-sample ingest on an emulated stream
/// drawn from the profile's baseline statistics.
BenchReport bench(const CalibrationProfile& profile, const BenchConfig& config = {});

nlohmann::json to_json(const BenchReport& r);

}  // namespace driftvote
