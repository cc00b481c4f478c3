#include <atomic>
#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "driftvote/bench.hpp"
#include "driftvote/bus.hpp"
#include "driftvote/calibration.hpp"
#include "driftvote/detector.hpp"
#include "driftvote/driftgen.hpp"
#include "driftvote/experiment.hpp"
#include "driftvote/fleet.hpp"

namespace fs = std::filesystem;
using namespace driftvote;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kDegraded = 2;
constexpr int kInternal = 3;

bool is_csv(const fs::path& p) { return p.extension() == ".csv"; }

nlohmann::json event_json(const DriftEvent& ev, std::int64_t timestamp_ms) {
  return {{"stream", ev.stream_id},
          {"start", ev.start},
          {"end", ev.end},
          {"timestamp", timestamp_ms},
          {"window_length", ev.window_length},
          {"counts", ev.per_estimator_counts},
          {"z", ev.z_statistic},
          {"mean_offset", ev.mean_offset}};
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string input;
  std::string out;
  std::string sensor;
  std::string device;
  std::size_t baseline = kDefaultBaselineLength;
  std::uint64_t seed = 1;
  std::size_t replay_length = 0;
  bool with_samples = false;
};

int cmd_calibrate(const CalibrateArgs& a) {
  BaselineStats baseline;
  std::string sensor = a.sensor;
  const fs::path input(a.input);
  if (is_csv(input)) {
    CsvStream csv(input, {}, a.device.empty() ? std::nullopt : std::optional(a.device),
                  sensor.empty() ? std::nullopt : std::optional(sensor));
    std::vector<double> prefix;
    while (prefix.size() < a.baseline) {
      auto s = csv.next();
      if (!s) break;
      if (sensor.empty()) sensor = csv.last_sensor();
      prefix.push_back(s->value);
    }
    if (prefix.size() < a.baseline) {
      throw InputError("calibrate: " + a.input + " holds " + std::to_string(prefix.size()) + " usable samples, " +
                       std::to_string(a.baseline) + " required");
    }
    baseline = collect_baseline(std::span<const double>(prefix));
  } else {
    const auto source = load_profile(input);
    if (sensor.empty()) sensor = source.sensor_type;
    if (source.baseline.samples.size() >= kMinBaselineLength) {
      baseline = collect_baseline(std::span<const double>(source.baseline.samples));
    } else {
      // No stored prefix: draw one from the profile's baseline statistics.
      std::mt19937_64 rng(a.seed);
      std::normal_distribution<double> noise(source.baseline.mu_prime, source.baseline.sigma);
      std::vector<double> prefix(a.baseline);
      for (auto& x : prefix) x = noise(rng);
      baseline = collect_baseline(std::span<const double>(prefix));
    }
  }
  if (sensor.empty()) sensor = "temperature";
  auto grid = GridSpec::defaults();
  grid.seed = a.seed;
  grid.replay_length = a.replay_length;
  const auto profile = calibrate(baseline, grid, sensor);
  save_profile(profile, a.out, a.with_samples);
  std::cerr << "calibrated " << sensor << ": delta=" << profile.params.delta << " beta=" << profile.params.beta
            << " lambda=" << profile.params.lambda << " alpha=" << profile.params.alpha
            << " l_r=" << profile.params.l_r << " evaluations=" << profile.evaluations
            << (profile.degraded ? " DEGRADED" : "") << '\n';
  return profile.degraded ? kDegraded : kOk;
}

// ---------------------------------------------------------------------------

struct DetectArgs {
  std::string profile;
  std::string input;
  std::string device;
  std::string sensor;
};

int cmd_detect(const DetectArgs& a) {
  const auto profile = load_profile(a.profile);
  if (profile.baseline.sigma <= 0.0) throw InputError("detect: profile has no usable baseline");
  std::size_t events = 0;
  std::size_t skipped = 0;

  if (a.input.rfind("bus:", 0) == 0) {
    // Bridge stdin JSON lines {"topic", "payload"} onto an in-process bus and
    // detect on every stream that matches the pattern.
    const std::string pattern = a.input.substr(4);
    auto bus = Bus::create();
    auto sub = bus->subscribe(pattern);
    std::map<std::string, Detector> detectors;
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        bus->publish(j.at("topic").get<std::string>(), j.at("payload").dump());
      } catch (const std::exception&) {
        ++skipped;
        continue;
      }
      while (auto msg = sub->try_receive()) {
        const auto p = nlohmann::json::parse(msg->payload);
        auto it = detectors.find(msg->topic);
        if (it == detectors.end()) it = detectors.emplace(msg->topic, Detector(profile, {}, msg->topic)).first;
        Sample s{it->second.ingested(), p.value("timestamp", std::int64_t{0}), p.at("value").get<double>()};
        try {
          if (auto ev = it->second.ingest(s)) {
            std::cout << event_json(*ev, s.timestamp_ms).dump() << '\n';
            ++events;
          }
        } catch (const InputError&) {
          ++skipped;
        }
      }
    }
  } else {
    CsvStream csv(a.input, {}, a.device.empty() ? std::nullopt : std::optional(a.device),
                  a.sensor.empty() ? std::nullopt : std::optional(a.sensor));
    Detector detector(profile, {}, a.device.empty() ? profile.sensor_type : a.device);
    while (auto s = csv.next()) {
      if (auto ev = detector.ingest(*s)) {
        std::cout << event_json(*ev, s->timestamp_ms).dump() << '\n';
        ++events;
      }
    }
    skipped = csv.skipped();
  }
  std::cerr << events << " drift events, " << skipped << " rows skipped\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct EmulateArgs {
  std::string profile;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  std::string device = "dev1";
  std::string format = "csv";
  double rate_hz = 0.0;
  bool inject_listen = false;
  std::vector<std::string> injections;  // kind:q:length@index
};

int cmd_emulate(const EmulateArgs& a) {
  const auto profile = load_profile(a.profile);
  SensorProfile sensor{profile.sensor_type, profile.baseline.mu_prime, profile.baseline.sigma2, 10'000};
  Emulator emulator(sensor, a.seed);

  std::map<std::uint64_t, InjectionCommand> scheduled;
  for (const auto& spec : a.injections) {
    const auto at = spec.find('@');
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    if (at == std::string::npos || c1 == std::string::npos || c2 == std::string::npos || c2 > at) {
      throw InputError("emulate: injection must look like kind:q:length@index, got " + spec);
    }
    InjectionCommand cmd;
    cmd.kind = slot_kind_from_string(spec.substr(0, c1));
    cmd.q_offset = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    cmd.length = std::stoul(spec.substr(c2 + 1, at - c2 - 1));
    scheduled[std::stoull(spec.substr(at + 1))] = cmd;
  }

  std::mutex inbox_mu;
  std::deque<InjectionCommand> inbox;
  std::atomic<bool> stop{false};
  std::thread listener;
  if (a.inject_listen) {
    listener = std::thread([&] {
      std::string line;
      while (!stop && std::getline(std::cin, line)) {
        if (line.empty()) continue;
        try {
          auto cmd = injection_from_json(nlohmann::json::parse(line));
          std::lock_guard lock(inbox_mu);
          inbox.push_back(cmd);
        } catch (const std::exception& e) {
          std::cerr << "rejected injection: " << e.what() << '\n';
        }
      }
    });
    listener.detach();
  }

  const std::string topic = "telemetry/" + a.device + "/" + sensor.sensor_type;
  if (a.format == "csv") std::cout << "timestamp,device_id,sensor_type,value,label\n";
  std::cout << std::setprecision(17);
  const auto period = a.rate_hz > 0.0 ? std::chrono::duration<double>(1.0 / a.rate_hz) : std::chrono::duration<double>(0);
  auto next_tick = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < a.samples; ++i) {
    if (auto it = scheduled.find(i); it != scheduled.end()) emulator.submit(it->second);
    {
      std::lock_guard lock(inbox_mu);
      while (!inbox.empty()) {
        emulator.submit(inbox.front());
        inbox.pop_front();
      }
    }
    const auto e = emulator.next();
    if (a.format == "csv") {
      std::cout << e.sample.timestamp_ms << ',' << a.device << ',' << sensor.sensor_type << ',' << e.sample.value << ','
                << static_cast<int>(e.label) << '\n';
    } else {
      const nlohmann::json payload = {{"timestamp", e.sample.timestamp_ms}, {"value", e.sample.value}, {"label", e.label}};
      std::cout << nlohmann::json{{"topic", topic}, {"payload", payload}}.dump() << '\n';
    }
    if (a.rate_hz > 0.0) {
      std::cout.flush();
      next_tick += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
      std::this_thread::sleep_until(next_tick);
    }
  }
  stop = true;
  if (emulator.rejected() > 0) std::cerr << emulator.rejected() << " injections rejected\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string config;
  std::string jsonl;
  std::string csv;
  std::size_t runs = 0;
  std::size_t threads = 0;
  bool quiet = false;
};

int cmd_experiment(const ExperimentArgs& a) {
  auto config = load_experiment_config(a.config);
  apply_seed_override(config);
  if (!a.jsonl.empty()) config.jsonl_path = a.jsonl;
  if (!a.csv.empty()) config.csv_path = a.csv;
  if (a.runs > 0) config.n_runs = a.runs;
  if (a.threads > 0) config.threads = a.threads;
  const auto report = run_experiment(config, [&](std::size_t done, std::size_t total) {
    if (!a.quiet && (done == total || done % 50 == 0)) std::cerr << "\r" << done << "/" << total << " runs" << std::flush;
  });
  if (!a.quiet) std::cerr << '\n';
  std::cout << std::left << std::setw(12) << "sensor" << std::setw(8) << "q/s2" << std::setw(10) << "variant"
            << std::setw(7) << "runs" << std::setw(10) << "F1" << std::setw(10) << "F1 std" << std::setw(10) << "P"
            << std::setw(10) << "R" << "slots\n";
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& ag : report.aggregates) {
    std::cout << std::setw(12) << ag.sensor << std::setw(8) << std::setprecision(3) << ag.q_multiple
              << std::setprecision(4) << std::setw(10) << to_string(ag.variant) << std::setw(7) << ag.runs
              << std::setw(10) << ag.f1_mean << std::setw(10) << ag.f1_std << std::setw(10) << ag.precision_mean
              << std::setw(10) << ag.recall_mean << ag.slot_detection_rate << '\n';
  }
  std::cerr << "wall " << std::fixed << std::setprecision(1) << report.wall_seconds << " s, " << report.degraded_runs
            << " degraded runs\n";
  return report.degraded_runs > 0 ? kDegraded : kOk;
}

// ---------------------------------------------------------------------------

struct FleetArgs {
  std::string manifest;
  std::string scenario = "natural";
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
};

int cmd_fleet(const FleetArgs& a) {
  FleetSimConfig config;
  config.devices = load_manifest(a.manifest);
  config.scenario = fleet_scenario_from_string(a.scenario);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < a.seeds; ++k) {
    config.seed = a.seed + k;
    const auto r = run_fleet_sim(config);
    auto j = to_json(r);
    j["seed"] = config.seed;
    j["scenario"] = a.scenario;
    std::cout << j.dump() << '\n';
    if (r.all_correct) ++correct;
  }
  std::cerr << correct << "/" << a.seeds << " seeds classified as expected\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string profile;
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& a) {
  auto profile = load_profile(a.profile);
  BenchConfig config;
  config.samples = a.samples;
  config.seed = a.seed;
  const auto r = bench(profile, config);
  std::cout << to_json(r).dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming drift detection with estimator voting"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Grid-search hyperparameters on a drift-free prefix");
  c->add_option("input", cal.input, "CSV telemetry or an existing profile")->required();
  c->add_option("--out", cal.out, "Profile to write (.json or key-value)")->required();
  c->add_option("--sensor", cal.sensor, "Sensor type filter and profile name");
  c->add_option("--device", cal.device, "Device filter for CSV input");
  c->add_option("--baseline", cal.baseline, "Prefix length")->check(CLI::Range(30, 100000));
  c->add_option("--seed", cal.seed, "Seed for KSWIN draws and synthetic prefixes");
  c->add_option("--replay-length", cal.replay_length, "Bootstrap the prefix to this length when certifying");
  c->add_flag("--with-samples", cal.with_samples, "Store the prefix in the profile");

  DetectArgs det;
  auto* d = app.add_subcommand("detect", "Run the detector over a CSV file or bus topic");
  d->add_option("--profile", det.profile, "Calibration profile")->required();
  d->add_option("--input", det.input, "CSV path, or bus:<pattern> to read topic messages from stdin")->required();
  d->add_option("--device", det.device, "Device filter for CSV input");
  d->add_option("--sensor", det.sensor, "Sensor filter for CSV input");

  EmulateArgs emu;
  auto* e = app.add_subcommand("emulate", "Emit a live synthetic stream");
  e->add_option("--profile", emu.profile, "Profile providing the baseline statistics")->required();
  e->add_option("--samples", emu.samples, "Number of samples");
  e->add_option("--seed", emu.seed, "Noise seed");
  e->add_option("--device", emu.device, "Device id");
  e->add_option("--format", emu.format, "csv or bus")->check(CLI::IsMember({"csv", "bus"}));
  e->add_option("--rate", emu.rate_hz, "Samples per second, 0 for unthrottled");
  e->add_option("--inject", emu.injections, "Scheduled drift kind:q:length@index");
  e->add_flag("--inject-listen", emu.inject_listen, "Accept JSON injection commands on stdin");

  ExperimentArgs exp;
  auto* x = app.add_subcommand("experiment", "Monte-Carlo accuracy experiment");
  x->add_option("--config", exp.config, "Experiment JSON")->required();
  x->add_option("--jsonl", exp.jsonl, "Override per-run report path");
  x->add_option("--csv", exp.csv, "Override aggregate CSV path");
  x->add_option("--runs", exp.runs, "Override n_runs");
  x->add_option("--threads", exp.threads, "Worker threads");
  x->add_flag("--quiet", exp.quiet, "No progress output");

  FleetArgs fl;
  auto* f = app.add_subcommand("fleet-sim", "Simulate peer classification of drifts");
  f->add_option("--manifest", fl.manifest, "Fleet manifest JSON")->required();
  f->add_option("--scenario", fl.scenario, "natural, abnormal or mixed")
      ->check(CLI::IsMember({"natural", "abnormal", "mixed"}));
  f->add_option("--seed", fl.seed, "First seed");
  f->add_option("--seeds", fl.seeds, "Number of seeds");

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "Measure detector throughput");
  b->add_option("--profile", bn.profile, "Calibration profile")->required();
  b->add_option("--samples", bn.samples, "Samples to ingest");
  b->add_option("--seed", bn.seed, "Stream seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*c) return cmd_calibrate(cal);
    if (*d) return cmd_detect(det);
    if (*e) return cmd_emulate(emu);
    if (*x) return cmd_experiment(exp);
    if (*f) return cmd_fleet(fl);
    if (*b) return cmd_bench(bn);
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInputError;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInputError;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInputError;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
