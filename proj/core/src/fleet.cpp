#include "driftvote/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "driftvote/bus.hpp"
#include "driftvote/calibration.hpp"
#include "driftvote/driftgen.hpp"
#include "driftvote/ks.hpp"

namespace driftvote {

nlohmann::json to_json(const DeviceMetadata& m) {
  return {{"device_id", m.device_id}, {"sensor_type", m.sensor_type}, {"tags", m.tags}};
}

DeviceMetadata metadata_from_json(const nlohmann::json& j) {
  DeviceMetadata m;
  try {
    m.device_id = j.at("device_id").get<std::string>();
    m.sensor_type = j.at("sensor_type").get<std::string>();
    if (j.contains("tags")) m.tags = j.at("tags").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("device metadata: ") + e.what());
  }
  if (m.device_id.empty()) throw FormatError("device metadata: empty device_id");
  return m;
}

std::vector<DeviceMetadata> manifest_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("fleet manifest: expected a JSON list");
  std::vector<DeviceMetadata> out;
  std::set<std::string> seen;
  for (const auto& item : j) {
    auto m = metadata_from_json(item);
    if (!seen.insert(m.device_id).second) throw FormatError("fleet manifest: duplicate device_id " + m.device_id);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<DeviceMetadata> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

nlohmann::json to_json(const DriftAnnouncement& a) {
  return {{"device_id", a.metadata.device_id},
          {"sensor_type", a.metadata.sensor_type},
          {"tags", a.metadata.tags},
          {"vote", a.vote},
          {"z", a.z_statistic},
          {"mean_offset", a.mean_offset},
          {"window_length", a.window_length},
          {"sample_index", a.sample_index},
          {"issued_at", a.issued_at}};
}

DriftAnnouncement announcement_from_json(const nlohmann::json& j) {
  DriftAnnouncement a;
  a.metadata = metadata_from_json(j);
  try {
    a.vote = j.at("vote").get<int>();
    a.z_statistic = j.at("z").get<double>();
    a.mean_offset = j.at("mean_offset").get<double>();
    a.window_length = j.at("window_length").get<std::size_t>();
    a.sample_index = j.at("sample_index").get<std::uint64_t>();
    a.issued_at = j.at("issued_at").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("announcement: ") + e.what());
  }
  if (a.vote != 0 && a.vote != 1) throw FormatError("announcement: vote must be 0 or 1");
  return a;
}

DriftAnnouncement build_announcement(const DriftEvent& event, const DeviceMetadata& metadata, std::int64_t issued_at) {
  DriftAnnouncement a;
  a.metadata = metadata;
  a.vote = event.vote;
  a.z_statistic = event.z_statistic;
  a.mean_offset = event.mean_offset;
  a.window_length = event.window_length;
  a.sample_index = event.end;
  a.issued_at = issued_at;
  return a;
}

DriftAnnouncement heartbeat(const DeviceMetadata& metadata, double z_statistic, double mean_offset,
                            std::size_t window_length, std::uint64_t sample_index, std::int64_t issued_at) {
  DriftAnnouncement a;
  a.metadata = metadata;
  a.vote = 0;
  a.z_statistic = z_statistic;
  a.mean_offset = mean_offset;
  a.window_length = window_length;
  a.sample_index = sample_index;
  a.issued_at = issued_at;
  return a;
}

std::string announce_topic(const DeviceMetadata& m) { return "drift/" + m.device_id + "/" + m.sensor_type + "/announce"; }
std::string verdict_topic(const DeviceMetadata& m) { return "drift/" + m.device_id + "/" + m.sensor_type + "/verdict"; }

namespace {

bool same_group(const DeviceMetadata& a, const DeviceMetadata& b, const std::vector<std::string>& keys) {
  if (a.sensor_type != b.sensor_type) return false;
  for (const auto& k : keys) {
    const auto ia = a.tags.find(k);
    const auto ib = b.tags.find(k);
    const bool ha = ia != a.tags.end();
    const bool hb = ib != b.tags.end();
    if (ha != hb) return false;
    if (ha && ia->second != ib->second) return false;
  }
  return true;
}

}  // namespace

std::vector<DeviceMetadata> match_peers(const DeviceMetadata& subject, const std::vector<DeviceMetadata>& all,
                                        const std::vector<std::string>& keys) {
  std::vector<DeviceMetadata> out;
  for (const auto& m : all) {
    if (m.device_id != subject.device_id && same_group(subject, m, keys)) out.push_back(m);
  }
  return out;
}

std::string to_string(FleetVerdict v) {
  switch (v) {
    case FleetVerdict::natural:
      return "natural";
    case FleetVerdict::abnormal:
      return "abnormal";
    case FleetVerdict::insufficient_peers:
      break;
  }
  return "insufficient_peers";
}

FleetVerdict fleet_verdict_from_string(const std::string& s) {
  if (s == "natural") return FleetVerdict::natural;
  if (s == "abnormal") return FleetVerdict::abnormal;
  if (s == "insufficient_peers") return FleetVerdict::insufficient_peers;
  throw FormatError("unknown fleet verdict: " + s);
}

std::int64_t FleetOptions::window_ms(std::int64_t sample_period_ms, std::size_t l_max) const {
  if (correlation_window_ms > 0) return correlation_window_ms;
  return 5 * sample_period_ms * static_cast<std::int64_t>(l_max);
}

nlohmann::json to_json(const ClassificationResult& r) {
  return {{"verdict", to_string(r.verdict)}, {"device_id", r.subject},     {"sample_index", r.sample_index},
          {"peer_count", r.peer_count},      {"agreeing_peers", r.agreeing_peers}, {"z_values", r.z_values},
          {"skewed", r.skewed}};
}

double median(std::vector<double> v) {
  if (v.empty()) throw InputError("median: empty input");
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double mad(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> dev(v.size());
  std::transform(v.begin(), v.end(), dev.begin(), [m](double x) { return std::abs(x - m); });
  return median(std::move(dev));
}

ClassificationResult classify(const DriftAnnouncement& subject, const std::vector<DriftAnnouncement>& received,
                              const FleetOptions& options, std::int64_t window_ms, std::int64_t now_ms) {
  if (subject.vote != 1) throw InputError("classify: subject announcement must carry vote 1");
  ClassificationResult r;
  r.subject = subject.metadata.device_id;
  r.sample_index = subject.sample_index;

  // Representative announcement per matching peer: a vote-1 announcement
  // beats a heartbeat, then the one issued closest to the subject. The total
  // order keeps the choice independent of arrival order.
  std::map<std::string, DriftAnnouncement> chosen;
  for (const auto& a : received) {
    if (a.metadata.device_id == subject.metadata.device_id) continue;
    if (!same_group(subject.metadata, a.metadata, options.match_keys)) continue;
    if (std::llabs(a.issued_at - subject.issued_at) > window_ms) continue;
    if (a.issued_at - now_ms > window_ms / 2) ++r.skewed;
    auto [it, inserted] = chosen.try_emplace(a.metadata.device_id, a);
    if (!inserted) {
      const auto& b = it->second;
      const auto da = -std::llabs(a.issued_at - subject.issued_at);
      const auto db = -std::llabs(b.issued_at - subject.issued_at);
      if (std::tie(a.vote, da, a.issued_at, a.z_statistic) > std::tie(b.vote, db, b.issued_at, b.z_statistic)) {
        it->second = a;
      }
    }
  }

  r.peer_count = chosen.size();
  r.z_values.push_back(subject.z_statistic);
  for (const auto& [id, a] : chosen) {
    r.z_values.push_back(a.z_statistic);
    if (a.vote == 1) ++r.agreeing_peers;
  }
  if (r.peer_count < options.min_peers) {
    r.verdict = FleetVerdict::insufficient_peers;
    return r;
  }
  const std::size_t needed = (r.peer_count + 2) / 2;
  const double spread = std::max(mad(r.z_values), options.mad_floor);
  double tolerance = options.kappa * spread;
  if (options.resolution_alpha > 0.0 && subject.window_length > 0 && options.baseline_length > 0) {
    const double scale = std::sqrt(1.0 / static_cast<double>(subject.window_length) +
                                   1.0 / static_cast<double>(options.baseline_length));
    tolerance = std::max(tolerance, kolmogorov_critical_value(options.resolution_alpha, 1) * scale);
  }
  const bool outlier = std::abs(subject.z_statistic - median(r.z_values)) > tolerance;
  r.verdict = r.agreeing_peers >= needed && !outlier ? FleetVerdict::natural : FleetVerdict::abnormal;
  return r;
}

void AnnouncementStore::add(DriftAnnouncement a) {
  std::lock_guard lock(mu_);
  auto next = std::make_shared<std::vector<DriftAnnouncement>>(*items_);
  next->push_back(std::move(a));
  items_ = std::move(next);
}

void AnnouncementStore::prune(std::int64_t cutoff_ms) {
  std::lock_guard lock(mu_);
  auto next = std::make_shared<std::vector<DriftAnnouncement>>(*items_);
  std::erase_if(*next, [&](const DriftAnnouncement& a) { return a.issued_at < cutoff_ms; });
  items_ = std::move(next);
}

std::shared_ptr<const std::vector<DriftAnnouncement>> AnnouncementStore::snapshot() const {
  std::lock_guard lock(mu_);
  return items_;
}

std::size_t AnnouncementStore::size() const {
  std::lock_guard lock(mu_);
  return items_->size();
}

std::string to_string(FleetScenario s) {
  switch (s) {
    case FleetScenario::natural:
      return "natural";
    case FleetScenario::abnormal:
      return "abnormal";
    case FleetScenario::mixed:
      break;
  }
  return "mixed";
}

FleetScenario fleet_scenario_from_string(const std::string& s) {
  if (s == "natural") return FleetScenario::natural;
  if (s == "abnormal") return FleetScenario::abnormal;
  if (s == "mixed") return FleetScenario::mixed;
  throw InputError("unknown fleet scenario: " + s);
}

nlohmann::json to_json(const FleetSimResult& r) {
  nlohmann::json devices = nlohmann::json::array();
  for (const auto& d : r.devices) {
    nlohmann::json verdicts = nlohmann::json::array();
    for (const auto& v : d.verdicts) verdicts.push_back(to_json(v));
    devices.push_back({{"device_id", d.device_id},
                       {"drifted", d.drifted},
                       {"expected", d.expected ? nlohmann::json(to_string(*d.expected)) : nlohmann::json(nullptr)},
                       {"events", d.events},
                       {"verdicts", verdicts},
                       {"correct", d.correct}});
  }
  return {{"devices", devices},
          {"announcements", r.announcements},
          {"heartbeats", r.heartbeats},
          {"all_correct", r.all_correct}};
}

namespace {

struct SimDevice {
  SimDevice(DeviceMetadata m, Emulator e, std::shared_ptr<Subscription> sub)
      : meta(std::move(m)), emulator(std::move(e)), inbox(std::move(sub)) {}

  DeviceMetadata meta;
  Emulator emulator;
  std::optional<Detector> detector;
  std::deque<double> recent;
  double mu = 0.0;
  double sigma = 1.0;
  std::size_t l_max = 0;
  std::shared_ptr<Subscription> inbox;
  AnnouncementStore store;
  std::vector<DriftAnnouncement> own;
};

std::vector<bool> drifting_devices(const FleetSimConfig& c) {
  std::vector<bool> out(c.devices.size(), false);
  if (c.devices.empty()) return out;
  switch (c.scenario) {
    case FleetScenario::natural:
      std::fill(out.begin(), out.end(), true);
      break;
    case FleetScenario::abnormal:
      out[0] = true;
      break;
    case FleetScenario::mixed: {
      out[0] = true;
      bool lone_chosen = false;
      for (std::size_t i = 1; i < c.devices.size(); ++i) {
        if (same_group(c.devices[0], c.devices[i], c.options.match_keys)) {
          out[i] = true;
        } else if (!lone_chosen) {
          out[i] = true;
          lone_chosen = true;
        }
      }
      break;
    }
  }
  return out;
}

std::optional<FleetVerdict> expected_verdict(const FleetSimConfig& c, const std::vector<bool>& drifting, std::size_t i) {
  if (!drifting[i]) return std::nullopt;
  const auto peers = match_peers(c.devices[i], c.devices, c.options.match_keys);
  if (peers.size() < c.options.min_peers) return FleetVerdict::insufficient_peers;
  const bool lone = c.scenario == FleetScenario::abnormal ||
                    (c.scenario == FleetScenario::mixed && !same_group(c.devices[0], c.devices[i], c.options.match_keys));
  return lone ? FleetVerdict::abnormal : FleetVerdict::natural;
}

}  // namespace

FleetSimResult run_fleet_sim(const FleetSimConfig& config) {
  if (config.devices.empty()) throw InputError("fleet-sim: empty manifest");
  if (config.baseline_length < kMinBaselineLength) throw InputError("fleet-sim: baseline too short");
  {
    std::set<std::string> ids;
    for (const auto& d : config.devices) {
      if (!ids.insert(d.device_id).second) throw InputError("fleet-sim: duplicate device_id " + d.device_id);
    }
  }
  const auto drifting = drifting_devices(config);
  FleetOptions options = config.options;
  options.baseline_length = config.baseline_length;
  auto bus = Bus::create();
  auto verdicts = bus->subscribe("drift/+/+/verdict");

  std::mt19937_64 rng(config.seed);
  std::vector<std::unique_ptr<SimDevice>> devices;
  std::int64_t period = 0;
  std::size_t l_max = 0;
  for (std::size_t i = 0; i < config.devices.size(); ++i) {
    const auto& meta = config.devices[i];
    const auto sensor = SensorProfile::named(meta.sensor_type);
    auto dev = std::make_unique<SimDevice>(meta, Emulator(sensor, rng()), bus->subscribe("drift/+/+/announce"));
    period = std::max(period, sensor.sample_period_ms);
    devices.push_back(std::move(dev));
  }

  // Calibration on the drift-free prefix of every device.
  std::vector<std::vector<double>> prefixes(devices.size());
  for (std::size_t i = 0; i < devices.size(); ++i) {
    for (std::size_t k = 0; k < config.baseline_length; ++k) prefixes[i].push_back(devices[i]->emulator.next().sample.value);
    auto profile = CalibrationProfile::published(devices[i]->meta.sensor_type);
    profile.baseline = collect_baseline(std::span<const double>(prefixes[i]));
    devices[i]->detector.emplace(profile, DetectorOptions{}, devices[i]->meta.device_id);
    devices[i]->mu = profile.baseline.mu_prime;
    devices[i]->sigma = profile.baseline.sigma;
    devices[i]->l_max = profile.window_model.l_max;
    l_max = std::max(l_max, profile.window_model.l_max);
  }
  const std::int64_t window_ms = options.window_ms(period, l_max);
  const std::int64_t heartbeat_every = std::max<std::int64_t>(window_ms / 2, 1);

  // Shared drift magnitude and sign for co-drifting devices.
  std::bernoulli_distribution sign(0.5);
  const double direction = sign(rng) ? 1.0 : -1.0;

  FleetSimResult result;
  const std::size_t drift_at = config.baseline_length + config.lead_in;
  const std::size_t total = drift_at + config.drift_length + config.tail;
  std::int64_t next_heartbeat = 0;
  for (std::size_t t = config.baseline_length; t < total; ++t) {
    const std::int64_t now = static_cast<std::int64_t>(t) * period;
    const bool beat = now >= next_heartbeat;
    if (beat) next_heartbeat = now + heartbeat_every;
    for (std::size_t i = 0; i < devices.size(); ++i) {
      auto& d = *devices[i];
      if (t == drift_at && drifting[i]) {
        const auto sensor = SensorProfile::named(d.meta.sensor_type);
        d.emulator.inject(SlotKind::abrupt, direction * config.q_multiple * sensor.sigma2, config.drift_length);
      }
      const auto emitted = d.emulator.next();
      d.recent.push_back(emitted.sample.value);
      if (d.recent.size() > d.l_max) d.recent.pop_front();
      const auto ev = d.detector->ingest(emitted.sample);
      if (ev) {
        auto a = build_announcement(*ev, d.meta, now);
        d.own.push_back(a);
        bus->publish(announce_topic(d.meta), to_json(a).dump());
        ++result.announcements;
      }
      if (beat) {
        const std::size_t lv = d.detector->voting().voting_length();
        const std::size_t n = std::min(lv, d.recent.size());
        std::vector<double> window(d.recent.end() - static_cast<std::ptrdiff_t>(n), d.recent.end());
        const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(n);
        const auto hb = heartbeat(d.meta, one_sample_ks_normal(window, d.mu, d.sigma), mean - d.mu, n,
                                  d.detector->ingested() - 1, now);
        bus->publish(announce_topic(d.meta), to_json(hb).dump());
        ++result.heartbeats;
      }
    }
  }

  const std::int64_t end_ms = static_cast<std::int64_t>(total) * period;
  for (auto& dev : devices) {
    for (auto& msg : dev->inbox->drain()) dev->store.add(announcement_from_json(nlohmann::json::parse(msg.payload)));
    const auto snapshot = dev->store.snapshot();
    for (const auto& a : dev->own) {
      const auto r = classify(a, *snapshot, options, window_ms, end_ms);
      bus->publish(verdict_topic(dev->meta), to_json(r).dump());
    }
  }

  std::map<std::string, std::vector<ClassificationResult>> by_device;
  for (const auto& msg : verdicts->drain()) {
    const auto j = nlohmann::json::parse(msg.payload);
    ClassificationResult r;
    r.verdict = fleet_verdict_from_string(j.at("verdict").get<std::string>());
    r.subject = j.at("device_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<std::uint64_t>();
    r.peer_count = j.at("peer_count").get<std::size_t>();
    r.agreeing_peers = j.at("agreeing_peers").get<std::size_t>();
    r.z_values = j.at("z_values").get<std::vector<double>>();
    r.skewed = j.at("skewed").get<std::size_t>();
    by_device[r.subject].push_back(std::move(r));
  }
  bus->close();

  result.all_correct = true;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    DeviceOutcome o;
    o.device_id = devices[i]->meta.device_id;
    o.drifted = drifting[i];
    o.expected = expected_verdict(config, drifting, i);
    o.events = devices[i]->own.size();
    o.verdicts = by_device[o.device_id];
    if (o.expected) {
      o.correct = !o.verdicts.empty() &&
                  std::all_of(o.verdicts.begin(), o.verdicts.end(), [&](const auto& v) { return v.verdict == *o.expected; });
    } else {
      o.correct = o.verdicts.empty();
    }
    result.all_correct = result.all_correct && o.correct;
    result.devices.push_back(std::move(o));
  }
  return result;
}

}  // namespace driftvote
