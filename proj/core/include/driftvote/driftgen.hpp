#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftvote/types.hpp"

namespace driftvote {

struct SensorProfile {
  std::string sensor_type;
  double mu_prime = 0.0;
  double sigma2 = 1.0;
  std::int64_t sample_period_ms = 10'000;

  double sigma() const;
  void validate() const;

  /// Fixtures with the published per-sensor statistics.
  static SensorProfile temperature();
  static SensorProfile humidity();
  static SensorProfile pressure();
  static SensorProfile named(const std::string& sensor);
};

enum class SlotKind { normal, abrupt, incremental };
std::string to_string(SlotKind kind);
SlotKind slot_kind_from_string(const std::string& s);

struct TimeslotSpec {
  SlotKind kind = SlotKind::normal;
  std::size_t length = 0;
  double q_offset = 0.0;  // Q, unused for normal slots
  std::size_t offset = 0; // position of the first sample of the slot
};

struct LabeledStream {
  std::vector<Sample> samples;
  std::vector<std::uint8_t> labels;
  std::vector<TimeslotSpec> slots;
  std::uint64_t seed = 0;
  double q = 0.0;
};

inline constexpr std::size_t kMinSlotLength = 500;
inline constexpr std::size_t kMaxSlotLength = 1500;

/// The seven drift magnitudes sigma2 * {1/3, 1/2, 1, 2, 3, 4, 5}.
std::vector<double> q_grid(double sigma2);

/// n_slots timeslots of uniform length in [500, 1500], kinds drawn uniformly
/// (the first is always normal), Q ~ Uniform[-q, q] per drift slot.
/// Incremental slots emit Q/l * j + x_j for j = 0..l-1.
LabeledStream generate_experiment(const SensorProfile& profile, double q, std::size_t n_slots, std::uint64_t seed);

/// Appends `length` samples of one slot to `out` using `rng`.
void emit_slot(const SensorProfile& profile, const TimeslotSpec& slot, std::mt19937_64& rng, LabeledStream& out);

struct InjectionCommand {
  SlotKind kind = SlotKind::abrupt;
  double q_offset = 0.0;
  std::size_t length = 0;
};
nlohmann::json to_json(const InjectionCommand& cmd);
/// Throws FormatError for malformed bodies and InputError for a normal kind.
InjectionCommand injection_from_json(const nlohmann::json& j);

/// Live emulator emitting baseline noise until a drift is injected.
/// Injections queued with submit() are applied between samples.
class Emulator {
 public:
  Emulator(SensorProfile profile, std::uint64_t seed);

  /// Starts a drift slot with the next emitted sample and returns its index.
  /// Throws InputError for length 0 or a normal kind, BusyError while a
  /// previous injection is still active.
  std::uint64_t inject(SlotKind kind, double q_offset, std::size_t length);
  void submit(InjectionCommand cmd);

  struct Emitted {
    Sample sample;
    std::uint8_t label = 0;
  };
  Emitted next();

  bool drifting() const noexcept { return remaining_ > 0; }
  std::uint64_t position() const noexcept { return next_index_; }
  const SensorProfile& profile() const noexcept { return profile_; }
  /// Rejections (busy or invalid) of commands queued through submit().
  std::size_t rejected() const noexcept { return rejected_; }

 private:
  SensorProfile profile_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
  std::deque<InjectionCommand> queue_;
  std::uint64_t next_index_ = 0;
  SlotKind kind_ = SlotKind::normal;
  double q_offset_ = 0.0;
  std::size_t slot_length_ = 0;
  std::size_t remaining_ = 0;
  std::size_t rejected_ = 0;
};

/// Column names of the telemetry CSV layout.
struct ColumnMap {
  std::string timestamp = "timestamp";
  std::string device = "device_id";
  std::string sensor = "sensor_type";
  std::string value = "value";
};

/// Streams samples from a CSV file in file order. Malformed rows are skipped
/// and counted; when the file is exhausted more than 10% malformed rows
/// raise FormatError. Optional filters keep a single device and/or sensor.
class CsvStream {
 public:
  explicit CsvStream(const std::filesystem::path& path, ColumnMap columns = {},
                     std::optional<std::string> device = std::nullopt,
                     std::optional<std::string> sensor = std::nullopt);

  std::optional<Sample> next();
  /// Device and sensor of the row that produced the last sample.
  const std::string& last_device() const noexcept { return last_device_; }
  const std::string& last_sensor() const noexcept { return last_sensor_; }
  std::size_t skipped() const noexcept { return skipped_; }
  std::size_t rows() const noexcept { return rows_; }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  std::optional<std::string> device_filter_;
  std::optional<std::string> sensor_filter_;
  long ts_col_ = -1;
  long dev_col_ = -1;
  long sensor_col_ = -1;
  long value_col_ = -1;
  std::uint64_t next_index_ = 0;
  std::size_t skipped_ = 0;
  std::size_t rows_ = 0;
  bool finished_ = false;
  std::string last_device_;
  std::string last_sensor_;
};

/// Reads a whole CSV and returns one stream per (device_id, sensor_type),
/// each with its own ordinals starting at 0.
std::map<std::pair<std::string, std::string>, std::vector<Sample>> demultiplex_csv(
    const std::filesystem::path& path, ColumnMap columns = {}, std::size_t* skipped = nullptr);

/// Writes timestamp,device_id,sensor_type,value,label.
void write_labeled_csv(const LabeledStream& stream, const std::string& device_id, const std::string& sensor_type,
                       const std::filesystem::path& path);

}  // namespace driftvote
