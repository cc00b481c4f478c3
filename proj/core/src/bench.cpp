#include "driftvote/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "driftvote/detector.hpp"
#include "driftvote/driftgen.hpp"

namespace driftvote {

BenchReport bench(const CalibrationProfile& profile, const BenchConfig& config) {
  if (config.samples == 0) throw InputError("bench: samples must be positive");
  using clock = std::chrono::steady_clock;

  SensorProfile sensor{profile.sensor_type, profile.baseline.mu_prime, std::max(profile.baseline.sigma2, 1e-12), 10'000};
  Emulator emulator(sensor, config.seed);
  std::vector<Sample> stream(config.samples);
  for (std::size_t i = 0; i < config.samples; ++i) {
    if (config.drift_every > 0 && i > 0 && i % config.drift_every == 0 && !emulator.drifting()) {
      const double q = (i / config.drift_every) % 2 ? 5.0 * sensor.sigma2 : -5.0 * sensor.sigma2;
      emulator.inject((i / config.drift_every) % 3 ? SlotKind::abrupt : SlotKind::incremental, q,
                      config.drift_length);
    }
    stream[i] = emulator.next().sample;
  }

  BenchReport r;
  r.samples = config.samples;
  const auto t0 = clock::now();
  Detector detector(profile);
  r.init_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();

  std::vector<float> lat(config.samples);
  const auto start = clock::now();
  for (std::size_t i = 0; i < config.samples; ++i) {
    const auto a = clock::now();
    if (detector.ingest(stream[i])) ++r.events;
    lat[i] = static_cast<float>(std::chrono::duration<double, std::micro>(clock::now() - a).count());
  }
  r.total_seconds = std::chrono::duration<double>(clock::now() - start).count();

  double sum = 0.0;
  for (float x : lat) sum += x;
  r.mean_us = sum / static_cast<double>(lat.size());
  auto pct = [&](double p) {
    const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(lat.size() - 1)));
    std::nth_element(lat.begin(), lat.begin() + static_cast<std::ptrdiff_t>(k), lat.end());
    return static_cast<double>(lat[k]);
  };
  r.p50_us = pct(0.50);
  r.p99_us = pct(0.99);
  r.max_us = *std::max_element(lat.begin(), lat.end());
  r.samples_per_second = static_cast<double>(r.samples) / r.total_seconds;
  return r;
}

nlohmann::json to_json(const BenchReport& r) {
  return {{"samples", r.samples},         {"events", r.events},   {"init_ms", r.init_ms},
          {"mean_us", r.mean_us},         {"p50_us", r.p50_us},   {"p99_us", r.p99_us},
          {"max_us", r.max_us},           {"samples_per_second", r.samples_per_second},
          {"total_seconds", r.total_seconds}};
}

}  // namespace driftvote
