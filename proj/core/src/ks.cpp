#include "driftvote/ks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "driftvote/types.hpp"

namespace driftvote {

std::string to_string(Direction d) {
  switch (d) {
    case Direction::up:
      return "up";
    case Direction::down:
      return "down";
    case Direction::none:
      break;
  }
  return "none";
}

double ks_two_sample_distance_sorted(std::span<const double> a, std::span<const double> b) noexcept {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    // Step past every copy of the smallest pending value in both samples so
    // ties are evaluated with both CDFs at their right limits.
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Once one side is exhausted its CDF is 1; the gap only shrinks from here.
  return best;
}

double ks_two_sample_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw InputError("ks_two_sample_distance: empty sample");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  for (double x : sa) require_finite(x, "ks_two_sample_distance");
  for (double x : sb) require_finite(x, "ks_two_sample_distance");
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return ks_two_sample_distance_sorted(sa, sb);
}

double normal_cdf(double x, double mu, double sigma) noexcept {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

double one_sample_ks_normal(std::span<const double> window, double mu0, double sigma0) {
  if (window.empty()) {
    throw InputError("one_sample_ks: empty window");
  }
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
    throw InputError("one_sample_ks: sigma must be positive");
  }
  std::vector<double> sorted(window.begin(), window.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double best = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i], mu0, sigma0);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    best = std::max({best, above, below});
  }
  return best;
}

double kolmogorov_critical_value(double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0) || n == 0) {
    throw InputError("kolmogorov_critical_value: alpha in (0,1) and n >= 1 required");
  }
  // Smirnov's asymptotic form: c(alpha) = sqrt(-ln(alpha/2) / 2).
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

}  // namespace driftvote
