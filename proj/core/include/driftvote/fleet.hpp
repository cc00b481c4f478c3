#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftvote/detector.hpp"

namespace driftvote {

struct DeviceMetadata {
  std::string device_id;
  std::string sensor_type;
  std::map<std::string, std::string> tags;
  bool operator==(const DeviceMetadata&) const = default;
};

nlohmann::json to_json(const DeviceMetadata& m);
DeviceMetadata metadata_from_json(const nlohmann::json& j);

/// A fleet manifest is a JSON list of device metadata with unique ids.
std::vector<DeviceMetadata> manifest_from_json(const nlohmann::json& j);
std::vector<DeviceMetadata> load_manifest(const std::filesystem::path& path);

struct DriftAnnouncement {
  DeviceMetadata metadata;
  int vote = 0;
  double z_statistic = 0.0;
  double mean_offset = 0.0;
  std::size_t window_length = 0;
  std::uint64_t sample_index = 0;
  std::int64_t issued_at = 0;  // ms on the issuing device's clock
  bool operator==(const DriftAnnouncement&) const = default;
};

nlohmann::json to_json(const DriftAnnouncement& a);
/// Throws FormatError on missing or mistyped fields.
DriftAnnouncement announcement_from_json(const nlohmann::json& j);

DriftAnnouncement build_announcement(const DriftEvent& event, const DeviceMetadata& metadata, std::int64_t issued_at);
DriftAnnouncement heartbeat(const DeviceMetadata& metadata, double z_statistic, double mean_offset,
                            std::size_t window_length, std::uint64_t sample_index, std::int64_t issued_at);

std::string announce_topic(const DeviceMetadata& m);
std::string verdict_topic(const DeviceMetadata& m);

/// Peers other than the subject with the same sensor type and equal values
/// for every key in `keys`. A key missing on both sides counts as equal.
std::vector<DeviceMetadata> match_peers(const DeviceMetadata& subject, const std::vector<DeviceMetadata>& all,
                                        const std::vector<std::string>& keys = {"room"});

enum class FleetVerdict { natural, abnormal, insufficient_peers };
std::string to_string(FleetVerdict v);
FleetVerdict fleet_verdict_from_string(const std::string& s);

struct FleetOptions {
  std::vector<std::string> match_keys{"room"};
  std::size_t min_peers = 2;
  double kappa = 3.0;
  double mad_floor = 1e-6;
  /// Z is measured against a baseline estimated from `baseline_length`
  /// samples, so deviations below c(alpha) * sqrt(1/window + 1/baseline) are
  /// never outliers. 0 disables.
  double resolution_alpha = 0.05;
  std::size_t baseline_length = 100;
  /// T_c; 0 derives 5 * sample period * l_max.
  std::int64_t correlation_window_ms = 0;

  std::int64_t window_ms(std::int64_t sample_period_ms, std::size_t l_max) const;
};

struct ClassificationResult {
  FleetVerdict verdict = FleetVerdict::insufficient_peers;
  std::string subject;
  std::uint64_t sample_index = 0;
  std::size_t peer_count = 0;
  std::size_t agreeing_peers = 0;
  std::vector<double> z_values;  // subject first, then peers by device id
  std::size_t skewed = 0;        // peer announcements ahead of `now` by more than T_c/2
};

nlohmann::json to_json(const ClassificationResult& r);

double median(std::vector<double> v);
/// Median absolute deviation from the median.
double mad(const std::vector<double>& v);

/// Classifies the subject's drift against the peer announcements issued
/// within T_c of it. Each matching peer is represented by its vote-1
/// announcement closest in time to the subject's, or failing that by its
/// closest heartbeat.
ClassificationResult classify(const DriftAnnouncement& subject, const std::vector<DriftAnnouncement>& received,
                              const FleetOptions& options, std::int64_t window_ms, std::int64_t now_ms);

/// Received announcements. One writer appends; readers take immutable
/// snapshots.
class AnnouncementStore {
 public:
  void add(DriftAnnouncement a);
  /// Drops announcements issued before `cutoff_ms`.
  void prune(std::int64_t cutoff_ms);
  std::shared_ptr<const std::vector<DriftAnnouncement>> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const std::vector<DriftAnnouncement>> items_ = std::make_shared<std::vector<DriftAnnouncement>>();
};

enum class FleetScenario { natural, abnormal, mixed };
std::string to_string(FleetScenario s);
FleetScenario fleet_scenario_from_string(const std::string& s);

struct FleetSimConfig {
  std::vector<DeviceMetadata> devices;
  FleetScenario scenario = FleetScenario::natural;
  std::uint64_t seed = 1;
  FleetOptions options;
  std::size_t baseline_length = 100;
  std::size_t lead_in = 1500;       // samples between calibration and the drift
  std::size_t drift_length = 1500;
  std::size_t tail = 2000;
  double q_multiple = 5.0;          // drift magnitude in units of sigma^2
};

struct DeviceOutcome {
  std::string device_id;
  bool drifted = false;
  std::optional<FleetVerdict> expected;  // nothing: the device must stay silent
  std::vector<ClassificationResult> verdicts;
  std::size_t events = 0;
  bool correct = false;
};

struct FleetSimResult {
  std::vector<DeviceOutcome> devices;
  std::size_t announcements = 0;
  std::size_t heartbeats = 0;
  bool all_correct = false;
};

nlohmann::json to_json(const FleetSimResult& r);

/// Runs every device on its own emulator with the bundled profile for its
/// sensor type, exchanges announcements over an in-process bus and classifies
/// each detected drift once the run ends.
///   natural:  every device drifts together.
///   abnormal: only the first device drifts.
///   mixed:    the first device's peer group drifts together and the first
///             device outside that group drifts alone.
FleetSimResult run_fleet_sim(const FleetSimConfig& config);

}  // namespace driftvote
