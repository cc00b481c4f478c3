#include "driftvote/driftgen.hpp"

#include <cmath>
#include <sstream>

namespace driftvote {

double SensorProfile::sigma() const { return std::sqrt(sigma2); }

void SensorProfile::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InputError("sensor profile: sigma2 must be > 0");
  if (!std::isfinite(mu_prime)) throw InputError("sensor profile: mu_prime must be finite");
  if (sample_period_ms <= 0) throw InputError("sensor profile: sample period must be positive");
}

SensorProfile SensorProfile::temperature() { return {"temperature", 20.32, 1.178, 10'000}; }
SensorProfile SensorProfile::humidity() { return {"humidity", 30.14, 0.966, 10'000}; }
SensorProfile SensorProfile::pressure() { return {"pressure", 102.4, 224.52, 10'000}; }

SensorProfile SensorProfile::named(const std::string& sensor) {
  if (sensor == "temperature") return temperature();
  if (sensor == "humidity") return humidity();
  if (sensor == "pressure") return pressure();
  throw InputError("unknown sensor profile: " + sensor);
}

std::string to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::abrupt:
      return "abrupt";
    case SlotKind::incremental:
      return "incremental";
    case SlotKind::normal:
      break;
  }
  return "normal";
}

SlotKind slot_kind_from_string(const std::string& s) {
  if (s == "normal") return SlotKind::normal;
  if (s == "abrupt") return SlotKind::abrupt;
  if (s == "incremental") return SlotKind::incremental;
  throw FormatError("unknown slot kind: " + s);
}

std::vector<double> q_grid(double sigma2) {
  if (!(sigma2 > 0.0)) throw InputError("q_grid: sigma2 must be > 0");
  return {sigma2 / 3.0, sigma2 / 2.0, sigma2, 2.0 * sigma2, 3.0 * sigma2, 4.0 * sigma2, 5.0 * sigma2};
}

void emit_slot(const SensorProfile& profile, const TimeslotSpec& slot, std::mt19937_64& rng, LabeledStream& out) {
  std::normal_distribution<double> noise(profile.mu_prime, profile.sigma());
  const double step = slot.length > 0 ? slot.q_offset / static_cast<double>(slot.length) : 0.0;
  for (std::size_t j = 0; j < slot.length; ++j) {
    double x = noise(rng);
    switch (slot.kind) {
      case SlotKind::abrupt:
        x += slot.q_offset;
        break;
      case SlotKind::incremental:
        x += step * static_cast<double>(j);
        break;
      case SlotKind::normal:
        break;
    }
    const auto index = static_cast<std::uint64_t>(out.samples.size());
    out.samples.push_back({index, static_cast<std::int64_t>(index) * profile.sample_period_ms, x});
    out.labels.push_back(slot.kind == SlotKind::normal ? 0 : 1);
  }
}

LabeledStream generate_experiment(const SensorProfile& profile, double q, std::size_t n_slots, std::uint64_t seed) {
  profile.validate();
  if (!(q > 0.0) || !std::isfinite(q)) throw InputError("generate_experiment: q must be > 0");
  if (n_slots == 0) throw InputError("generate_experiment: at least one slot required");
  LabeledStream out;
  out.seed = seed;
  out.q = q;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> kind_dist(0, 2);
  std::uniform_int_distribution<std::size_t> length_dist(kMinSlotLength, kMaxSlotLength);
  std::uniform_real_distribution<double> q_dist(-q, q);
  out.samples.reserve(n_slots * kMaxSlotLength);
  out.labels.reserve(n_slots * kMaxSlotLength);
  for (std::size_t k = 0; k < n_slots; ++k) {
    TimeslotSpec slot;
    const int kind = kind_dist(rng);
    slot.kind = k == 0 ? SlotKind::normal : static_cast<SlotKind>(kind);
    slot.length = length_dist(rng);
    const double drawn = q_dist(rng);
    slot.q_offset = slot.kind == SlotKind::normal ? 0.0 : drawn;
    slot.offset = out.samples.size();
    out.slots.push_back(slot);
    emit_slot(profile, slot, rng, out);
  }
  return out;
}

nlohmann::json to_json(const InjectionCommand& cmd) {
  return {{"kind", to_string(cmd.kind)}, {"q_offset", cmd.q_offset}, {"length", cmd.length}};
}

InjectionCommand injection_from_json(const nlohmann::json& j) {
  InjectionCommand cmd;
  try {
    cmd.kind = slot_kind_from_string(j.at("kind").get<std::string>());
    cmd.q_offset = j.at("q_offset").get<double>();
    const auto length = j.at("length").get<long long>();
    if (length < 0) throw FormatError("injection: negative length");
    cmd.length = static_cast<std::size_t>(length);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("injection: ") + e.what());
  }
  if (cmd.kind == SlotKind::normal) throw InputError("injection: kind must be abrupt or incremental");
  return cmd;
}

Emulator::Emulator(SensorProfile profile, std::uint64_t seed)
    : profile_(std::move(profile)), rng_(seed), noise_(profile_.mu_prime, profile_.sigma()) {
  profile_.validate();
}

std::uint64_t Emulator::inject(SlotKind kind, double q_offset, std::size_t length) {
  if (kind == SlotKind::normal) throw InputError("inject_drift: kind must be abrupt or incremental");
  if (length == 0) throw InputError("inject_drift: length must be positive");
  require_finite(q_offset, "inject_drift");
  if (remaining_ > 0) throw BusyError("inject_drift: a drift slot is already active");
  kind_ = kind;
  q_offset_ = q_offset;
  slot_length_ = length;
  remaining_ = length;
  return next_index_;
}

void Emulator::submit(InjectionCommand cmd) { queue_.push_back(cmd); }

Emulator::Emitted Emulator::next() {
  while (!queue_.empty() && remaining_ == 0) {
    const auto cmd = queue_.front();
    queue_.pop_front();
    try {
      inject(cmd.kind, cmd.q_offset, cmd.length);
    } catch (const InputError&) {
      ++rejected_;
    }
  }
  Emitted out;
  double x = noise_(rng_);
  if (remaining_ > 0) {
    const std::size_t j = slot_length_ - remaining_;
    if (kind_ == SlotKind::abrupt) {
      x += q_offset_;
    } else {
      x += q_offset_ / static_cast<double>(slot_length_) * static_cast<double>(j);
    }
    out.label = 1;
    --remaining_;
  }
  out.sample = {next_index_, static_cast<std::int64_t>(next_index_) * profile_.sample_period_ms, x};
  ++next_index_;
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

long column_index(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<long>(i);
  }
  return -1;
}

constexpr double kMaxMalformedFraction = 0.10;

}  // namespace

CsvStream::CsvStream(const std::filesystem::path& path, ColumnMap columns, std::optional<std::string> device,
                     std::optional<std::string> sensor)
    : in_(path), path_(path), device_filter_(std::move(device)), sensor_filter_(std::move(sensor)) {
  if (!in_) throw IoError("cannot read " + path.string());
  std::string header_line;
  if (!std::getline(in_, header_line)) throw FormatError(path.string() + ": missing header row");
  if (header_line.size() >= 3 && static_cast<unsigned char>(header_line[0]) == 0xEF) header_line.erase(0, 3);
  const auto header = split_csv_line(header_line);
  ts_col_ = column_index(header, columns.timestamp);
  value_col_ = column_index(header, columns.value);
  dev_col_ = column_index(header, columns.device);
  sensor_col_ = column_index(header, columns.sensor);
  if (ts_col_ < 0 || value_col_ < 0) {
    throw FormatError(path.string() + ": header lacks '" + columns.timestamp + "' or '" + columns.value + "'");
  }
  if ((device_filter_ && dev_col_ < 0) || (sensor_filter_ && sensor_col_ < 0)) {
    throw FormatError(path.string() + ": filter column missing from header");
  }
}

std::optional<Sample> CsvStream::next() {
  if (finished_) return std::nullopt;
  std::string line;
  while (std::getline(in_, line)) {
    if (line.empty() || line == "\r") continue;
    ++rows_;
    const auto cells = split_csv_line(line);
    auto cell = [&](long i) -> const std::string* {
      return i >= 0 && static_cast<std::size_t>(i) < cells.size() ? &cells[static_cast<std::size_t>(i)] : nullptr;
    };
    const std::string* ts = cell(ts_col_);
    const std::string* val = cell(value_col_);
    double ts_v = 0.0;
    double value = 0.0;
    if (!ts || !val || !parse_number(*ts, ts_v) || !parse_number(*val, value)) {
      ++skipped_;
      continue;
    }
    const std::string* dev = cell(dev_col_);
    const std::string* sen = cell(sensor_col_);
    if (device_filter_ && (!dev || *dev != *device_filter_)) continue;
    if (sensor_filter_ && (!sen || *sen != *sensor_filter_)) continue;
    last_device_ = dev ? *dev : std::string{};
    last_sensor_ = sen ? *sen : std::string{};
    return Sample{next_index_++, static_cast<std::int64_t>(std::llround(ts_v)), value};
  }
  finished_ = true;
  if (rows_ > 0 && static_cast<double>(skipped_) > kMaxMalformedFraction * static_cast<double>(rows_)) {
    throw FormatError(path_.string() + ": " + std::to_string(skipped_) + " of " + std::to_string(rows_) +
                      " rows malformed");
  }
  return std::nullopt;
}

std::map<std::pair<std::string, std::string>, std::vector<Sample>> demultiplex_csv(const std::filesystem::path& path,
                                                                                    ColumnMap columns,
                                                                                    std::size_t* skipped) {
  CsvStream stream(path, columns);
  std::map<std::pair<std::string, std::string>, std::vector<Sample>> out;
  while (auto s = stream.next()) {
    auto& dest = out[{stream.last_device(), stream.last_sensor()}];
    s->index = dest.size();
    dest.push_back(*s);
  }
  if (skipped) *skipped = stream.skipped();
  return out;
}

void write_labeled_csv(const LabeledStream& stream, const std::string& device_id, const std::string& sensor_type,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "timestamp,device_id,sensor_type,value,label\n";
  out.precision(17);
  for (std::size_t i = 0; i < stream.samples.size(); ++i) {
    const auto& s = stream.samples[i];
    out << s.timestamp_ms << ',' << device_id << ',' << sensor_type << ',' << s.value << ','
        << static_cast<int>(stream.labels[i]) << '\n';
  }
}

}  // namespace driftvote
