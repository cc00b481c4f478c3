#include "driftvote/window_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftvote/types.hpp"

namespace driftvote {

void WindowModel::validate(std::size_t kswin_length) const {
  if (!(zeta > 0.0)) throw InputError("window model: zeta must be > 0");
  if (!(eta < 0.0)) throw InputError("window model: eta must be < 0");
  if (!std::isfinite(gamma)) throw InputError("window model: gamma must be finite");
  if (l_min >= l_max) throw InputError("window model: l_min must be < l_max");
  if (l_min <= kswin_length) {
    throw InputError("window model: l_min must exceed the KSWIN window (" + std::to_string(kswin_length) + ")");
  }
}

double WindowModel::response(double x) const noexcept { return zeta * std::exp(eta * x) + gamma; }

WindowModel WindowModel::temperature(std::size_t l_min, std::size_t l_max) {
  return {8.782, -5.021, 1.468, l_min, l_max};
}

WindowModel WindowModel::humidity(std::size_t l_min, std::size_t l_max) {
  return {9.641, -4.117, 1.508, l_min, l_max};
}

WindowModel WindowModel::pressure(std::size_t l_min, std::size_t l_max) {
  return {7.590, -5.132, 1.829, l_min, l_max};
}

WindowModel WindowModel::for_sensor(std::string_view sensor, std::size_t l_min, std::size_t l_max) {
  if (sensor == "humidity") return humidity(l_min, l_max);
  if (sensor == "pressure") return pressure(l_min, l_max);
  return temperature(l_min, l_max);
}

double normalized_window(double upsilon, const WindowModel& model) noexcept {
  if (!(upsilon > model.gamma)) return 1.0;
  if (upsilon >= model.zeta + model.gamma) return 0.0;
  const double x = std::log((upsilon - model.gamma) / model.zeta) / model.eta;
  return std::clamp(x, 0.0, 1.0);
}

std::size_t adapt_voting_length(double upsilon, const WindowModel& model) noexcept {
  const double x = normalized_window(upsilon, model);
  const double span = static_cast<double>(model.l_max - model.l_min);
  return model.l_min + static_cast<std::size_t>(std::llround(x * span));
}

}  // namespace driftvote
