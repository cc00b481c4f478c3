#pragma once

#include <span>

#include "driftvote/types.hpp"

namespace driftvote {

/// sup_x |F_a(x) - F_b(x)| over the empirical CDFs of a and b, evaluated at
/// every pooled sample point. Throws InputError on empty or non-finite input.
double ks_two_sample_distance(std::span<const double> a, std::span<const double> b);

/// Same statistic for inputs that are already sorted ascending. No validation.
double ks_two_sample_distance_sorted(std::span<const double> a, std::span<const double> b) noexcept;

double normal_cdf(double x, double mu, double sigma) noexcept;

/// One-sample KS statistic of `window` against Normal(mu0, sigma0^2).
/// Throws InputError when the window is empty or sigma0 <= 0.
double one_sample_ks_normal(std::span<const double> window, double mu0, double sigma0);

/// Asymptotic one-sample Kolmogorov critical value c(alpha)/sqrt(n).
double kolmogorov_critical_value(double alpha, std::size_t n);

}  // namespace driftvote
