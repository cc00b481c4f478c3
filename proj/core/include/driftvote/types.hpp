#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace driftvote {

/// One timestamped reading on one stream.
struct Sample {
  std::uint64_t index = 0;
  std::int64_t timestamp_ms = 0;
  double value = 0.0;
};

enum class Direction { none, up, down };

struct Verdict {
  bool drifted = false;
  Direction direction = Direction::none;
};

// Error taxonomy shared across the library. The CLI maps these onto exit codes.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BusyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw InputError(std::string(what) + ": non-finite value");
  }
}

std::string to_string(Direction d);

}  // namespace driftvote
