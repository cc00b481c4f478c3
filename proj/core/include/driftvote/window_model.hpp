#pragma once

#include <cstddef>
#include <string_view>

#include "driftvote/types.hpp"

namespace driftvote {

/// Exponential relation between the mean-change ratio and the normalised
/// voting window size: upsilon(x) = zeta * exp(eta * x) + gamma, x in [0,1].
/// x maps affinely onto [l_min, l_max].
struct WindowModel {
  double zeta = 8.782;
  double eta = -5.021;
  double gamma = 1.468;
  std::size_t l_min = 331;
  std::size_t l_max = 2000;

  /// Throws InputError unless zeta > 0, eta < 0, l_min < l_max and
  /// l_min > kswin_length.
  void validate(std::size_t kswin_length) const;

  double response(double x) const noexcept;

  static WindowModel temperature(std::size_t l_min, std::size_t l_max);
  static WindowModel humidity(std::size_t l_min, std::size_t l_max);
  static WindowModel pressure(std::size_t l_min, std::size_t l_max);
  /// Coefficients for a named sensor; unknown names fall back to temperature.
  static WindowModel for_sensor(std::string_view sensor, std::size_t l_min, std::size_t l_max);
};

/// Inverts the model for x, clamped to [0,1]. upsilon <= gamma gives 1 and
/// upsilon >= zeta + gamma gives 0.
double normalized_window(double upsilon, const WindowModel& model) noexcept;

/// round(l_min + x * (l_max - l_min)) with x from normalized_window.
std::size_t adapt_voting_length(double upsilon, const WindowModel& model) noexcept;

}  // namespace driftvote
