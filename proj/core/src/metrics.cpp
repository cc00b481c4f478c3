#include "driftvote/metrics.hpp"

#include "driftvote/types.hpp"

namespace driftvote {

Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size()) throw InputError("f1_score: prediction and truth lengths differ");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (t) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

F1Result f1_from_counts(const Confusion& c) noexcept {
  F1Result r;
  r.counts = c;
  const auto predicted = c.tp + c.fp;
  const auto actual = c.tp + c.fn;
  r.degenerate = predicted == 0 || actual == 0;
  if (predicted > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(predicted);
  if (actual > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(actual);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

F1Result f1_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  return f1_from_counts(confusion(pred, truth));
}

}  // namespace driftvote
