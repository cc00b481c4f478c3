#include "driftvote/page_hinkley.hpp"

#include <algorithm>
#include <cmath>

namespace driftvote {

PageHinkley::PageHinkley(double beta, double lambda) : beta_(beta), lambda_(lambda) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("pht: beta must be > 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("pht: lambda must be > 0");
}

double PageHinkley::stddev() const noexcept {
  return n_ < 2 ? 0.0 : std::sqrt(m2_ / static_cast<double>(n_ - 1));
}

void PageHinkley::reset() noexcept {
  n_ = 0;
  mean_ = 0.0;
  m2_ = 0.0;
  u_up_ = 0.0;
  u_up_min_ = 0.0;
  u_down_ = 0.0;
  u_down_max_ = 0.0;
}

Verdict PageHinkley::insert(double x) {
  require_finite(x, "pht_insert");
  ++n_;
  const double prev_mean = mean_;
  mean_ += (x - mean_) / static_cast<double>(n_);
  m2_ += (x - prev_mean) * (x - mean_);

  const double dev = x - mean_;
  u_up_ += dev - beta_ / 2.0;
  u_up_min_ = std::min(u_up_min_, u_up_);
  u_down_ += dev + beta_ / 2.0;
  u_down_max_ = std::max(u_down_max_, u_down_);

  Verdict v;
  if (u_up_ - u_up_min_ >= lambda_) {
    v = {true, Direction::up};
  } else if (u_down_max_ - u_down_ >= lambda_) {
    v = {true, Direction::down};
  }
  if (v.drifted) reset();
  return v;
}

}  // namespace driftvote
