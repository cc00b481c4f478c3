#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "driftvote/adwin.hpp"
#include "driftvote/calibration.hpp"
#include "driftvote/detector.hpp"
#include "driftvote/kswin.hpp"
#include "driftvote/page_hinkley.hpp"

using namespace driftvote;

namespace {

std::vector<double> noise(std::size_t n, double mu, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mu, sigma);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

const std::vector<double>& stream() {
  static const auto s = noise(1 << 16, 20.32, 1.085, 11);
  return s;
}

}  // namespace

static void BM_AdwinInsert(benchmark::State& state) {
  Adwin adwin(0.002, 5);
  const auto& xs = stream();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(adwin.insert(xs[i++ & (xs.size() - 1)]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AdwinInsert);

static void BM_PageHinkleyInsert(benchmark::State& state) {
  PageHinkley pht(0.1, 50.0);
  const auto& xs = stream();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pht.insert(xs[i++ & (xs.size() - 1)]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PageHinkleyInsert);

static void BM_KswinInsert(benchmark::State& state) {
  Kswin kswin(0.005, static_cast<std::size_t>(state.range(0)), 30, 1);
  const auto& xs = stream();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kswin.insert(xs[i++ & (xs.size() - 1)]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KswinInsert)->Arg(100)->Arg(300)->Arg(1000);

static void BM_DetectorIngest(benchmark::State& state) {
  const auto profile = CalibrationProfile::published("temperature");
  Detector detector(profile);
  const auto& xs = stream();
  std::uint64_t i = 0;
  for (auto _ : state) {
    const Sample s{i, static_cast<std::int64_t>(i) * 10'000, xs[i & (xs.size() - 1)]};
    benchmark::DoNotOptimize(detector.ingest(s));
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DetectorIngest);

static void BM_Calibrate(benchmark::State& state) {
  const auto prefix = noise(100, 20.32, 1.085, 5);
  const auto baseline = collect_baseline(std::span<const double>(prefix));
  const auto grid = GridSpec::defaults();
  for (auto _ : state) {
    benchmark::DoNotOptimize(calibrate(baseline, grid));
  }
}
BENCHMARK(BM_Calibrate)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
