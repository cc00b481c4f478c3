#include "driftvote/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "driftvote/driftgen.hpp"
#include "driftvote/fleet.hpp"

namespace driftvote {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::adwin:
      return "adwin";
    case Variant::pht:
      return "pht";
    case Variant::kswin:
      return "kswin";
    case Variant::ensemble:
      break;
  }
  return "ensemble";
}

Variant variant_from_string(const std::string& s) {
  if (s == "ensemble") return Variant::ensemble;
  if (s == "adwin") return Variant::adwin;
  if (s == "pht") return Variant::pht;
  if (s == "kswin") return Variant::kswin;
  throw InputError("unknown detector variant: " + s);
}

DetectorOptions variant_options(Variant v, const RegimeOptions& regime) {
  DetectorOptions o;
  o.regime = regime;
  if (v == Variant::ensemble) return o;
  o.members = {v == Variant::adwin, v == Variant::pht, v == Variant::kswin};
  o.quorum = 1;
  return o;
}

std::vector<double> ExperimentConfig::resolved_q_multiples() const {
  if (!q_multiples.empty()) return q_multiples;
  return q_grid(1.0);
}

void ExperimentConfig::validate() const {
  if (n_runs < 1) throw InputError("experiment: n_runs must be >= 1");
  if (n_slots < 1) throw InputError("experiment: n_slots must be >= 1");
  if (sensors.empty()) throw InputError("experiment: no sensors selected");
  if (variants.empty()) throw InputError("experiment: no variants selected");
  if (baseline_length < kMinBaselineLength || baseline_length > kMinSlotLength) {
    throw InputError("experiment: baseline_length must lie in [30, 500]");
  }
  for (const auto& s : sensors) SensorProfile::named(s);
  for (double q : q_multiples) {
    if (!(q > 0.0) || !std::isfinite(q)) throw InputError("experiment: q multiples must be > 0");
  }
  grid.validate();
  if (fleet_manifest) load_manifest(*fleet_manifest);
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    if (j.contains("sensor")) c.sensors = {j.at("sensor").get<std::string>()};
    read_if(j, "sensors", c.sensors);
    if (j.contains("q_multiples")) {
      const auto& q = j.at("q_multiples");
      if (q.is_string()) {
        if (q.get<std::string>() != "grid") throw FormatError("experiment: q_multiples must be a list or \"grid\"");
      } else if (q.is_number()) {
        c.q_multiples = {q.get<double>()};
      } else {
        c.q_multiples = q.get<std::vector<double>>();
      }
    }
    read_if(j, "n_runs", c.n_runs);
    read_if(j, "n_slots", c.n_slots);
    read_if(j, "seed", c.seed);
    read_if(j, "baseline_length", c.baseline_length);
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) c.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    read_if(j, "calibrate", c.calibrate);
    if (j.contains("calibration")) {
      const auto& g = j.at("calibration");
      read_if(g, "delta", c.grid.delta);
      read_if(g, "lambda", c.grid.lambda);
      read_if(g, "beta", c.grid.beta);
      read_if(g, "alpha", c.grid.alpha);
      read_if(g, "l_r", c.grid.l_r);
      read_if(g, "l_omega", c.grid.l_omega);
      read_if(g, "refine_factor", c.grid.refine_factor);
      read_if(g, "kswin_seeds", c.grid.kswin_seeds);
      read_if(g, "budget", c.grid.budget);
      read_if(g, "replay_length", c.grid.replay_length);
    }
    if (j.contains("window_model")) {
      for (const auto& [sensor, w] : j.at("window_model").items()) {
        WindowOverride o;
        if (w.contains("zeta")) o.zeta = w.at("zeta").get<double>();
        if (w.contains("eta")) o.eta = w.at("eta").get<double>();
        if (w.contains("gamma")) o.gamma = w.at("gamma").get<double>();
        if (w.contains("l_max")) o.l_max = w.at("l_max").get<std::size_t>();
        c.window_models[sensor] = o;
      }
    }
    if (j.contains("regime")) {
      const auto& r = j.at("regime");
      read_if(r, "onset_reference", c.regime.onset_reference);
      read_if(r, "onset_threshold", c.regime.onset_threshold);
      read_if(r, "release_z", c.regime.release_z);
      read_if(r, "release_min_support", c.regime.release_min_support);
    }
    if (j.contains("fleet_manifest")) c.fleet_manifest = resolve(base_dir, j.at("fleet_manifest").get<std::string>());
    if (j.contains("output")) {
      const auto& o = j.at("output");
      if (o.contains("jsonl")) c.jsonl_path = resolve(base_dir, o.at("jsonl").get<std::string>());
      if (o.contains("csv")) c.csv_path = resolve(base_dir, o.at("csv").get<std::string>());
    }
    read_if(j, "threads", c.threads);
    read_if(j, "timing", c.timing);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json variants = nlohmann::json::array();
  for (auto v : c.variants) variants.push_back(to_string(v));
  nlohmann::json j = {{"sensors", c.sensors},
                      {"q_multiples", c.resolved_q_multiples()},
                      {"n_runs", c.n_runs},
                      {"n_slots", c.n_slots},
                      {"seed", c.seed},
                      {"baseline_length", c.baseline_length},
                      {"variants", variants},
                      {"calibrate", c.calibrate},
                      {"calibration",
                       {{"delta", c.grid.delta},
                        {"lambda", c.grid.lambda},
                        {"beta", c.grid.beta},
                        {"alpha", c.grid.alpha},
                        {"l_r", c.grid.l_r},
                        {"l_omega", c.grid.l_omega},
                        {"refine_factor", c.grid.refine_factor},
                        {"kswin_seeds", c.grid.kswin_seeds},
                        {"budget", c.grid.budget},
                        {"replay_length", c.grid.replay_length}}},
                      {"regime",
                       {{"onset_reference", c.regime.onset_reference},
                        {"onset_threshold", c.regime.onset_threshold},
                        {"release_z", c.regime.release_z},
                        {"release_min_support", c.regime.release_min_support}}},
                      {"threads", c.threads},
                      {"timing", c.timing}};
  if (!c.window_models.empty()) {
    nlohmann::json w = nlohmann::json::object();
    for (const auto& [sensor, o] : c.window_models) {
      nlohmann::json e = nlohmann::json::object();
      if (o.zeta) e["zeta"] = *o.zeta;
      if (o.eta) e["eta"] = *o.eta;
      if (o.gamma) e["gamma"] = *o.gamma;
      if (o.l_max) e["l_max"] = *o.l_max;
      w[sensor] = e;
    }
    j["window_model"] = w;
  }
  if (c.fleet_manifest) j["fleet_manifest"] = c.fleet_manifest->string();
  nlohmann::json out = nlohmann::json::object();
  if (c.jsonl_path) out["jsonl"] = c.jsonl_path->string();
  if (c.csv_path) out["csv"] = c.csv_path->string();
  if (!out.empty()) j["output"] = out;
  return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j, path.parent_path());
}

void apply_seed_override(ExperimentConfig& c) {
  const char* env = std::getenv("DRIFT_SEED");
  if (!env || !*env) return;
  try {
    std::size_t used = 0;
    const std::string s(env);
    const auto v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    c.seed = v;
  } catch (const std::exception&) {
    throw InputError(std::string("DRIFT_SEED is not an unsigned integer: ") + env);
  }
}

const Aggregate* MetricsReport::find(const std::string& sensor, double q_multiple, Variant v) const {
  for (const auto& a : aggregates) {
    if (a.sensor == sensor && a.variant == v && std::abs(a.q_multiple - q_multiple) < 1e-9) return &a;
  }
  return nullptr;
}

namespace {

struct Task {
  std::string sensor;
  double q_multiple = 0.0;
  std::size_t run = 0;
};

std::vector<RunRecord> execute(const ExperimentConfig& config, const Task& task) {
  const auto sensor = SensorProfile::named(task.sensor);
  const double q = task.q_multiple * sensor.sigma2;
  const std::uint64_t seed = config.seed + task.run;
  const auto stream = generate_experiment(sensor, q, config.n_slots, seed);
  const std::size_t b = config.baseline_length;

  std::vector<RunRecord> out(config.variants.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v].sensor = task.sensor;
    out[v].q_multiple = task.q_multiple;
    out[v].q = q;
    out[v].variant = config.variants[v];
    out[v].run = task.run;
    out[v].seed = seed;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto baseline = collect_baseline(std::span<const Sample>(stream.samples.data(), b));
  CalibrationProfile profile;
  if (config.calibrate) {
    GridSpec grid = config.grid;
    grid.seed = seed;
    profile = calibrate(baseline, grid, task.sensor);
  } else {
    profile = CalibrationProfile::published(task.sensor);
    profile.baseline = baseline;
  }
  if (auto it = config.window_models.find(task.sensor); it != config.window_models.end()) {
    if (it->second.zeta) profile.window_model.zeta = *it->second.zeta;
    if (it->second.eta) profile.window_model.eta = *it->second.eta;
    if (it->second.gamma) profile.window_model.gamma = *it->second.gamma;
    if (it->second.l_max) profile.window_model.l_max = *it->second.l_max;
  }
  const double init_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  for (auto& r : out) {
    r.params = profile.params;
    r.init_ms = init_ms;
  }
  if (profile.degraded || baseline.constant) {
    for (auto& r : out) r.degraded = true;
    return out;
  }
  profile.window_model.validate(profile.params.kswin_length());

  DetectorOptions base;
  EstimatorBank bank(profile.params);
  TrendWindow trend(base.trend_length);
  ValueHistory values(std::max(profile.window_model.l_max, base.trend_length));
  std::vector<VotingStage> stages;
  stages.reserve(config.variants.size());
  for (auto v : config.variants) {
    stages.emplace_back(profile.window_model, baseline.mu_prime, baseline.sigma, variant_options(v, config.regime));
  }

  const auto t1 = std::chrono::steady_clock::now();
  const std::size_t n = stream.samples.size();
  for (std::size_t i = b; i < n; ++i) {
    const double x = stream.samples[i].value;
    const auto row = bank.insert(x);
    values.push(x);
    const auto tr = trend.push(x);
    const auto concepts = bank.concepts();
    for (auto& s : stages) s.step(row, concepts, values, tr);
  }
  const double ingest_ns =
      std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t1).count() /
      static_cast<double>(std::max<std::size_t>(n - b, 1));

  const std::vector<std::uint8_t> truth(stream.labels.begin() + static_cast<std::ptrdiff_t>(b), stream.labels.end());
  for (std::size_t v = 0; v < stages.size(); ++v) {
    std::vector<std::uint8_t> pred(n - b, 0);
    for (const auto& span : stages[v].spans_through(n - b - 1)) {
      std::fill(pred.begin() + static_cast<std::ptrdiff_t>(span.start),
                pred.begin() + static_cast<std::ptrdiff_t>(span.end) + 1, std::uint8_t{1});
    }
    auto& r = out[v];
    r.metrics = f1_score(pred, truth);
    r.ingest_ns_mean = ingest_ns;
    for (const auto& slot : stream.slots) {
      if (slot.kind == SlotKind::normal || slot.offset + slot.length <= b) continue;
      ++r.slots_drifted;
      const std::size_t from = std::max(slot.offset, b) - b;
      const std::size_t to = slot.offset + slot.length - b;
      if (std::any_of(pred.begin() + static_cast<std::ptrdiff_t>(from), pred.begin() + static_cast<std::ptrdiff_t>(to),
                      [](std::uint8_t p) { return p != 0; })) {
        ++r.slots_detected;
      }
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& config,
                             const std::function<void(std::size_t, std::size_t)>& progress) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const auto qs = config.resolved_q_multiples();
  std::vector<Task> tasks;
  for (const auto& s : config.sensors) {
    for (double q : qs) {
      for (std::size_t r = 0; r < config.n_runs; ++r) tasks.push_back({s, q, r});
    }
  }

  std::vector<std::vector<RunRecord>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      try {
        results[k] = execute(config, tasks[k]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
        return;
      }
      const auto d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mu);
        progress(d, tasks.size());
      }
    }
  };
  std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, tasks.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  MetricsReport report;
  for (auto& batch : results) {
    if (!batch.empty() && batch.front().degraded) ++report.degraded_runs;
    for (auto& r : batch) report.runs.push_back(std::move(r));
  }

  for (const auto& s : config.sensors) {
    for (double q : qs) {
      for (auto v : config.variants) {
        Aggregate a;
        a.sensor = s;
        a.q_multiple = q;
        a.q = q * SensorProfile::named(s).sigma2;
        a.variant = v;
        std::vector<double> f1;
        std::vector<double> precision;
        std::vector<double> recall;
        std::size_t drifted = 0;
        std::size_t detected = 0;
        for (const auto& r : report.runs) {
          if (r.sensor != s || r.q_multiple != q || r.variant != v) continue;
          if (r.degraded) {
            ++a.degraded;
            continue;
          }
          f1.push_back(r.metrics.f1);
          precision.push_back(r.metrics.precision);
          recall.push_back(r.metrics.recall);
          drifted += r.slots_drifted;
          detected += r.slots_detected;
        }
        a.runs = f1.size();
        a.f1_mean = mean_of(f1);
        a.f1_std = stddev_of(f1);
        a.precision_mean = mean_of(precision);
        a.recall_mean = mean_of(recall);
        a.slot_detection_rate = drifted ? static_cast<double>(detected) / static_cast<double>(drifted) : 0.0;
        report.aggregates.push_back(a);
      }
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (config.jsonl_path) {
    if (config.jsonl_path->has_parent_path()) std::filesystem::create_directories(config.jsonl_path->parent_path());
    std::ofstream os(*config.jsonl_path);
    if (!os) throw IoError("cannot write " + config.jsonl_path->string());
    write_jsonl(report, os, config.timing);
  }
  if (config.csv_path) {
    if (config.csv_path->has_parent_path()) std::filesystem::create_directories(config.csv_path->parent_path());
    std::ofstream os(*config.csv_path);
    if (!os) throw IoError("cannot write " + config.csv_path->string());
    write_csv(report, os);
  }
  return report;
}

nlohmann::json to_json(const RunRecord& r, bool timing) {
  const auto& c = r.metrics.counts;
  nlohmann::json j = {{"sensor", r.sensor},
                      {"q_multiple", r.q_multiple},
                      {"q", r.q},
                      {"variant", to_string(r.variant)},
                      {"run", r.run},
                      {"seed", r.seed},
                      {"degraded", r.degraded},
                      {"precision", r.metrics.precision},
                      {"recall", r.metrics.recall},
                      {"f1", r.metrics.f1},
                      {"degenerate", r.metrics.degenerate},
                      {"tp", c.tp},
                      {"fp", c.fp},
                      {"fn", c.fn},
                      {"tn", c.tn},
                      {"evaluated", c.total()},
                      {"slots_drifted", r.slots_drifted},
                      {"slots_detected", r.slots_detected},
                      {"params",
                       {{"delta", r.params.delta},
                        {"beta", r.params.beta},
                        {"lambda", r.params.lambda},
                        {"alpha", r.params.alpha},
                        {"l_r", r.params.l_r},
                        {"l_omega", r.params.l_omega}}}};
  if (timing) j["timing"] = {{"init_ms", r.init_ms}, {"ingest_ns_mean", r.ingest_ns_mean}};
  return j;
}

void write_jsonl(const MetricsReport& report, std::ostream& os, bool timing) {
  for (const auto& r : report.runs) os << to_json(r, timing).dump() << '\n';
}

void write_csv(const MetricsReport& report, std::ostream& os) {
  os << "sensor,q_multiple,q,variant,runs,degraded,f1_mean,f1_std,precision_mean,recall_mean,slot_detection_rate\n";
  os.precision(10);
  for (const auto& a : report.aggregates) {
    os << a.sensor << ',' << a.q_multiple << ',' << a.q << ',' << to_string(a.variant) << ',' << a.runs << ','
       << a.degraded << ',' << a.f1_mean << ',' << a.f1_std << ',' << a.precision_mean << ',' << a.recall_mean << ','
       << a.slot_detection_rate << '\n';
  }
}

}  // namespace driftvote
