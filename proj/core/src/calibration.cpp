#include "driftvote/calibration.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "driftvote/adwin.hpp"
#include "driftvote/kswin.hpp"
#include "driftvote/page_hinkley.hpp"

namespace driftvote {

void EstimatorParams::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("profile: delta must lie in (0,1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("profile: alpha must lie in (0,1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("profile: beta must be > 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("profile: lambda must be > 0");
  if (l_r < 2) throw InputError("profile: l_r must be >= 2");
  if (l_omega < 2) throw InputError("profile: l_omega must be >= 2");
  if (max_buckets < 2) throw InputError("profile: max_buckets must be >= 2");
}

BaselineStats collect_baseline(std::span<const double> prefix) {
  if (prefix.size() < kMinBaselineLength) {
    throw InputError("collect_baseline: at least " + std::to_string(kMinBaselineLength) + " samples required, got " +
                     std::to_string(prefix.size()));
  }
  BaselineStats out;
  out.b = prefix.size();
  out.samples.assign(prefix.begin(), prefix.end());
  double sum = 0.0;
  for (double x : prefix) {
    require_finite(x, "collect_baseline");
    sum += x;
  }
  const double n = static_cast<double>(prefix.size());
  out.mu_prime = sum / n;
  double ss = 0.0;
  for (double x : prefix) ss += (x - out.mu_prime) * (x - out.mu_prime);
  out.sigma2 = ss / (n - 1.0);
  out.sigma = std::sqrt(out.sigma2);
  out.constant = out.sigma2 == 0.0;
  return out;
}

BaselineStats collect_baseline(std::span<const Sample> prefix) {
  std::vector<double> values;
  values.reserve(prefix.size());
  for (const auto& s : prefix) values.push_back(s.value);
  return collect_baseline(std::span<const double>(values));
}

namespace {

std::vector<double> linear_range(double lo, double hi, double step) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  for (long i = 0; i <= n; ++i) out.push_back(lo + step * static_cast<double>(i));
  return out;
}

std::vector<double> log_range(double lo, double hi, std::size_t points) {
  std::vector<double> out;
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    out.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1)));
  }
  return out;
}

// Values between the coarse neighbours of grid[i], refine_factor steps on
// each side. The endpoints of the coarse grid clamp the interval.
std::vector<double> refine(const std::vector<double>& grid, std::size_t i, std::size_t factor) {
  const double lo = i > 0 ? grid[i - 1] : grid[i];
  const double hi = i + 1 < grid.size() ? grid[i + 1] : grid[i];
  std::vector<double> out;
  const double left = (grid[i] - lo) / static_cast<double>(factor);
  const double right = (hi - grid[i]) / static_cast<double>(factor);
  for (std::size_t k = factor; k > 0; --k) {
    if (left > 0.0) out.push_back(grid[i] - left * static_cast<double>(k));
  }
  out.push_back(grid[i]);
  for (std::size_t k = 1; k <= factor; ++k) {
    if (right > 0.0) out.push_back(grid[i] + right * static_cast<double>(k));
  }
  return out;
}

std::vector<std::size_t> refine_int(const std::vector<std::size_t>& grid, std::size_t i, std::size_t factor) {
  std::vector<double> g(grid.begin(), grid.end());
  std::vector<std::size_t> out;
  for (double v : refine(g, i, factor)) {
    const auto r = static_cast<std::size_t>(std::llround(v));
    if (r >= 2 && (out.empty() || out.back() != r)) out.push_back(r);
  }
  return out;
}

// Running record of the best candidate seen. Passing candidates always beat
// failing ones; among passing ones `better` decides, among failing ones the
// fewer alarms win.
template <typename Candidate>
struct Selection {
  std::function<bool(const Candidate&, const Candidate&)> better;
  std::optional<Candidate> best_pass;
  std::optional<Candidate> least_fail;
  std::size_t least_fail_alarms = std::numeric_limits<std::size_t>::max();

  explicit Selection(std::function<bool(const Candidate&, const Candidate&)> f) : better(std::move(f)) {}

  void offer(const Candidate& c, std::size_t alarms) {
    if (alarms == 0) {
      if (!best_pass || better(c, *best_pass)) best_pass = c;
    } else if (alarms < least_fail_alarms) {
      least_fail_alarms = alarms;
      least_fail = c;
    }
  }
  bool passed() const { return best_pass.has_value(); }
  const Candidate& result() const { return best_pass ? *best_pass : *least_fail; }
};

class Budget {
 public:
  explicit Budget(std::size_t limit) : limit_(limit) {}
  bool take() {
    if (used_ >= limit_) return false;
    ++used_;
    return true;
  }
  std::size_t used() const { return used_; }

 private:
  std::size_t limit_;
  std::size_t used_ = 0;
};

}  // namespace

GridSpec GridSpec::defaults() {
  GridSpec g;
  g.delta = linear_range(0.05, 0.95, 0.05);
  g.lambda = {10, 20, 50, 100, 200, 480, 1e3, 2e3, 5e3, 1e4, 3e4, 1e5};
  g.beta = log_range(0.01, 5.0, 12);
  g.alpha = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  g.l_r = {100, 200, 300, 500};
  return g;
}

void GridSpec::validate() const {
  auto ascending = [](const auto& v) { return !v.empty() && std::is_sorted(v.begin(), v.end()); };
  if (!ascending(delta) || !ascending(lambda) || !ascending(beta) || !ascending(alpha) || !ascending(l_r)) {
    throw InputError("grid: every range must be non-empty and ascending");
  }
  if (delta.front() <= 0.0 || delta.back() >= 1.0) throw InputError("grid: delta must lie in (0,1)");
  if (alpha.front() <= 0.0 || alpha.back() >= 1.0) throw InputError("grid: alpha must lie in (0,1)");
  if (lambda.front() <= 0.0 || beta.front() <= 0.0) throw InputError("grid: lambda and beta must be > 0");
  if (l_r.front() < 2 || l_omega < 2) throw InputError("grid: window lengths must be >= 2");
  if (refine_factor < 2) throw InputError("grid: refine_factor must be >= 2");
  if (kswin_seeds == 0) throw InputError("grid: at least one KSWIN seed required");
}

std::size_t adwin_alarms(std::span<const double> values, double delta, std::size_t max_buckets) {
  Adwin est(delta, max_buckets);
  std::size_t alarms = 0;
  for (double x : values) alarms += est.insert(x) ? 1 : 0;
  return alarms;
}

std::size_t pht_alarms(std::span<const double> values, double beta, double lambda) {
  PageHinkley est(beta, lambda);
  std::size_t alarms = 0;
  for (double x : values) alarms += est.insert(x).drifted ? 1 : 0;
  return alarms;
}

std::size_t kswin_alarms(std::span<const double> values, double alpha, std::size_t l_r, std::size_t l_omega,
                         std::uint64_t seed0, std::size_t seeds) {
  std::size_t alarms = 0;
  for (std::size_t s = 0; s < seeds; ++s) {
    Kswin est(alpha, l_r, l_omega, seed0 + s);
    for (double x : values) alarms += est.insert(x) ? 1 : 0;
  }
  return alarms;
}

std::vector<double> replay_stream(const BaselineStats& baseline, const GridSpec& grid) {
  std::vector<double> out = baseline.samples;
  if (out.empty() || grid.replay_length <= out.size()) return out;
  std::mt19937_64 rng(grid.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, baseline.samples.size() - 1);
  while (out.size() < grid.replay_length) out.push_back(baseline.samples[pick(rng)]);
  return out;
}

CalibrationProfile calibrate(const BaselineStats& baseline, const GridSpec& grid, const std::string& sensor_type) {
  grid.validate();
  if (baseline.samples.size() < kMinBaselineLength) {
    throw InputError("calibrate: baseline must retain at least " + std::to_string(kMinBaselineLength) + " samples");
  }
  const std::vector<double> replay = replay_stream(baseline, grid);
  Budget budget(grid.budget);

  CalibrationProfile profile;
  profile.sensor_type = sensor_type;
  profile.baseline = baseline;
  profile.params.l_omega = grid.l_omega;
  profile.params.kswin_seed = grid.seed;

  // ADWIN: largest passing delta.
  Selection<double> adwin{[](double a, double b) { return a > b; }};
  std::size_t coarse_i = 0;
  for (std::size_t i = 0; i < grid.delta.size() && budget.take(); ++i) {
    adwin.offer(grid.delta[i], adwin_alarms(replay, grid.delta[i]));
  }
  coarse_i = static_cast<std::size_t>(std::find(grid.delta.begin(), grid.delta.end(), adwin.result()) - grid.delta.begin());
  for (double d : refine(grid.delta, coarse_i, grid.refine_factor)) {
    if (d <= 0.0 || d >= 1.0 || !budget.take()) continue;
    adwin.offer(d, adwin_alarms(replay, d));
  }

  // PHT: lexicographically smallest (lambda, beta).
  using LambdaBeta = std::pair<double, double>;
  Selection<LambdaBeta> pht{[](const LambdaBeta& a, const LambdaBeta& b) { return a < b; }};
  std::size_t li = 0;
  std::size_t bi = 0;
  for (std::size_t i = 0; i < grid.lambda.size(); ++i) {
    for (std::size_t j = 0; j < grid.beta.size(); ++j) {
      if (!budget.take()) break;
      pht.offer({grid.lambda[i], grid.beta[j]}, pht_alarms(replay, grid.beta[j], grid.lambda[i]));
    }
  }
  li = static_cast<std::size_t>(std::find(grid.lambda.begin(), grid.lambda.end(), pht.result().first) - grid.lambda.begin());
  bi = static_cast<std::size_t>(std::find(grid.beta.begin(), grid.beta.end(), pht.result().second) - grid.beta.begin());
  for (double l : refine(grid.lambda, li, grid.refine_factor)) {
    for (double b : refine(grid.beta, bi, grid.refine_factor)) {
      if (!budget.take()) break;
      pht.offer({l, b}, pht_alarms(replay, b, l));
    }
  }

  // KSWIN: l_omega fixed, then largest alpha and smallest l_r.
  using AlphaLr = std::pair<double, std::size_t>;
  Selection<AlphaLr> ks{[](const AlphaLr& a, const AlphaLr& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  }};
  auto ks_alarms = [&](double a, std::size_t r) {
    return kswin_alarms(replay, a, r, grid.l_omega, grid.seed, grid.kswin_seeds);
  };
  for (double a : grid.alpha) {
    for (std::size_t r : grid.l_r) {
      if (!budget.take()) break;
      ks.offer({a, r}, ks_alarms(a, r));
    }
  }
  const std::size_t ai =
      static_cast<std::size_t>(std::find(grid.alpha.begin(), grid.alpha.end(), ks.result().first) - grid.alpha.begin());
  const std::size_t ri =
      static_cast<std::size_t>(std::find(grid.l_r.begin(), grid.l_r.end(), ks.result().second) - grid.l_r.begin());
  for (double a : refine(grid.alpha, ai, grid.refine_factor)) {
    for (std::size_t r : refine_int(grid.l_r, ri, grid.refine_factor)) {
      if (a <= 0.0 || a >= 1.0 || !budget.take()) continue;
      ks.offer({a, r}, ks_alarms(a, r));
    }
  }

  profile.params.delta = adwin.result();
  profile.params.lambda = pht.result().first;
  profile.params.beta = pht.result().second;
  profile.params.alpha = ks.result().first;
  profile.params.l_r = ks.result().second;
  profile.degraded = !(adwin.passed() && pht.passed() && ks.passed());
  profile.evaluations = budget.used();
  const std::size_t kswin_len = profile.params.kswin_length();
  profile.window_model = WindowModel::for_sensor(sensor_type, kswin_len + 1, std::max<std::size_t>(2000, kswin_len + 2));
  return profile;
}

// ---------------------------------------------------------------------------
// Published fixtures

CalibrationProfile CalibrationProfile::published(const std::string& sensor) {
  CalibrationProfile p;
  p.sensor_type = sensor;
  if (sensor == "temperature") {
    p.params = {0.44, 5, 0.095, 480.0, 0.001, 300, 30, 0};
    p.baseline.mu_prime = 20.32;
    p.baseline.sigma2 = 1.178;
  } else if (sensor == "humidity") {
    p.params = {0.44, 5, 0.095, 560.0, 0.001, 300, 30, 0};
    p.baseline.mu_prime = 30.14;
    p.baseline.sigma2 = 0.966;
  } else if (sensor == "pressure") {
    p.params = {0.34, 5, 2.9, 29000.0, 0.0001, 300, 30, 0};
    p.baseline.mu_prime = 102.4;
    p.baseline.sigma2 = 224.52;
  } else {
    throw InputError("unknown sensor fixture: " + sensor);
  }
  p.baseline.sigma = std::sqrt(p.baseline.sigma2);
  p.baseline.b = kDefaultBaselineLength;
  const std::size_t kswin_len = p.params.kswin_length();
  p.window_model = WindowModel::for_sensor(sensor, kswin_len + 1, 2000);
  return p;
}

void CalibrationProfile::validate() const {
  params.validate();
  if (!(baseline.sigma2 >= 0.0) || !std::isfinite(baseline.mu_prime)) {
    throw InputError("profile: baseline statistics invalid");
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), r.ptr};
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw FormatError("profile: key '" + key + "' is not a number: " + v);
  }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (d < 0.0 || d != std::floor(d)) throw FormatError("profile: key '" + key + "' is not a count: " + v);
  return static_cast<std::size_t>(d);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string to_key_value(const CalibrationProfile& p, bool with_samples) {
  std::ostringstream os;
  os << "sensor_type = " << p.sensor_type << '\n';
  os << "delta = " << fmt_double(p.params.delta) << '\n';
  os << "max_buckets = " << p.params.max_buckets << '\n';
  os << "beta = " << fmt_double(p.params.beta) << '\n';
  os << "lambda = " << fmt_double(p.params.lambda) << '\n';
  os << "alpha = " << fmt_double(p.params.alpha) << '\n';
  os << "l_r = " << p.params.l_r << '\n';
  os << "l_omega = " << p.params.l_omega << '\n';
  os << "kswin_seed = " << p.params.kswin_seed << '\n';
  os << "mu_prime = " << fmt_double(p.baseline.mu_prime) << '\n';
  os << "sigma2 = " << fmt_double(p.baseline.sigma2) << '\n';
  os << "b = " << p.baseline.b << '\n';
  os << "constant = " << (p.baseline.constant ? 1 : 0) << '\n';
  os << "zeta = " << fmt_double(p.window_model.zeta) << '\n';
  os << "eta = " << fmt_double(p.window_model.eta) << '\n';
  os << "gamma = " << fmt_double(p.window_model.gamma) << '\n';
  os << "l_min = " << p.window_model.l_min << '\n';
  os << "l_max = " << p.window_model.l_max << '\n';
  os << "degraded = " << (p.degraded ? 1 : 0) << '\n';
  os << "evaluations = " << p.evaluations << '\n';
  if (with_samples) {
    os << "samples =";
    for (std::size_t i = 0; i < p.baseline.samples.size(); ++i) {
      os << (i == 0 ? " " : ",") << fmt_double(p.baseline.samples[i]);
    }
    os << '\n';
  }
  return os.str();
}

CalibrationProfile profile_from_key_value(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("profile: line " + std::to_string(lineno) + " has no '='");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("profile: missing key '" + key + "'");
    return it->second;
  };
  auto get_or = [&](const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };

  CalibrationProfile p;
  p.sensor_type = get("sensor_type");
  p.params.delta = parse_double("delta", get("delta"));
  p.params.max_buckets = parse_size("max_buckets", get_or("max_buckets", "5"));
  p.params.beta = parse_double("beta", get("beta"));
  p.params.lambda = parse_double("lambda", get("lambda"));
  p.params.alpha = parse_double("alpha", get("alpha"));
  p.params.l_r = parse_size("l_r", get("l_r"));
  p.params.l_omega = parse_size("l_omega", get_or("l_omega", "30"));
  p.params.kswin_seed = parse_size("kswin_seed", get_or("kswin_seed", "0"));
  p.baseline.mu_prime = parse_double("mu_prime", get("mu_prime"));
  p.baseline.sigma2 = parse_double("sigma2", get("sigma2"));
  p.baseline.sigma = std::sqrt(p.baseline.sigma2);
  p.baseline.b = parse_size("b", get_or("b", "100"));
  p.baseline.constant = get_or("constant", "0") == "1";
  const auto fallback = WindowModel::for_sensor(p.sensor_type, p.params.kswin_length() + 1, 2000);
  p.window_model.zeta = parse_double("zeta", get_or("zeta", fmt_double(fallback.zeta)));
  p.window_model.eta = parse_double("eta", get_or("eta", fmt_double(fallback.eta)));
  p.window_model.gamma = parse_double("gamma", get_or("gamma", fmt_double(fallback.gamma)));
  p.window_model.l_min = parse_size("l_min", get_or("l_min", std::to_string(fallback.l_min)));
  p.window_model.l_max = parse_size("l_max", get_or("l_max", std::to_string(fallback.l_max)));
  p.degraded = get_or("degraded", "0") == "1";
  p.evaluations = parse_size("evaluations", get_or("evaluations", "0"));
  if (auto it = kv.find("samples"); it != kv.end() && !it->second.empty()) {
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) p.baseline.samples.push_back(parse_double("samples", trim(tok)));
  }
  p.validate();
  return p;
}

nlohmann::json to_json(const CalibrationProfile& p, bool with_samples) {
  nlohmann::json j = {
      {"sensor_type", p.sensor_type},
      {"delta", p.params.delta},
      {"max_buckets", p.params.max_buckets},
      {"beta", p.params.beta},
      {"lambda", p.params.lambda},
      {"alpha", p.params.alpha},
      {"l_r", p.params.l_r},
      {"l_omega", p.params.l_omega},
      {"kswin_seed", p.params.kswin_seed},
      {"baseline", {{"mu_prime", p.baseline.mu_prime}, {"sigma2", p.baseline.sigma2}, {"b", p.baseline.b},
                    {"constant", p.baseline.constant}}},
      {"window_model", {{"zeta", p.window_model.zeta}, {"eta", p.window_model.eta}, {"gamma", p.window_model.gamma},
                        {"l_min", p.window_model.l_min}, {"l_max", p.window_model.l_max}}},
      {"degraded", p.degraded},
      {"evaluations", p.evaluations},
  };
  if (with_samples) j["baseline"]["samples"] = p.baseline.samples;
  return j;
}

CalibrationProfile profile_from_json(const nlohmann::json& j) {
  try {
    CalibrationProfile p;
    p.sensor_type = j.at("sensor_type").get<std::string>();
    p.params.delta = j.at("delta").get<double>();
    p.params.max_buckets = j.value("max_buckets", std::size_t{5});
    p.params.beta = j.at("beta").get<double>();
    p.params.lambda = j.at("lambda").get<double>();
    p.params.alpha = j.at("alpha").get<double>();
    p.params.l_r = j.at("l_r").get<std::size_t>();
    p.params.l_omega = j.value("l_omega", std::size_t{30});
    p.params.kswin_seed = j.value("kswin_seed", std::uint64_t{0});
    const auto& b = j.at("baseline");
    p.baseline.mu_prime = b.at("mu_prime").get<double>();
    p.baseline.sigma2 = b.at("sigma2").get<double>();
    p.baseline.sigma = std::sqrt(p.baseline.sigma2);
    p.baseline.b = b.value("b", kDefaultBaselineLength);
    p.baseline.constant = b.value("constant", false);
    if (b.contains("samples")) p.baseline.samples = b.at("samples").get<std::vector<double>>();
    p.window_model = WindowModel::for_sensor(p.sensor_type, p.params.kswin_length() + 1, 2000);
    if (j.contains("window_model")) {
      const auto& w = j.at("window_model");
      p.window_model.zeta = w.value("zeta", p.window_model.zeta);
      p.window_model.eta = w.value("eta", p.window_model.eta);
      p.window_model.gamma = w.value("gamma", p.window_model.gamma);
      p.window_model.l_min = w.value("l_min", p.window_model.l_min);
      p.window_model.l_max = w.value("l_max", p.window_model.l_max);
    }
    p.degraded = j.value("degraded", false);
    p.evaluations = j.value("evaluations", std::size_t{0});
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("profile json: ") + e.what());
  }
}

CalibrationProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read profile " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("profile json: ") + e.what());
    }
    return profile_from_json(j);
  }
  return profile_from_key_value(buf.str());
}

void save_profile(const CalibrationProfile& profile, const std::filesystem::path& path, bool with_samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write profile " + path.string());
  if (path.extension() == ".json") {
    out << to_json(profile, with_samples).dump(2) << '\n';
  } else {
    out << to_key_value(profile, with_samples);
  }
}

}  // namespace driftvote
