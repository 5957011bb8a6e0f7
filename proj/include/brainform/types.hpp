#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace brainform {

inline constexpr std::size_t kNumChannels = 8;

// Electrode montage of the headset, in stream order.
inline constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "fz", "c3", "cz", "c4", "pz", "po7", "oz", "po8"};

enum Channel : std::size_t { Fz = 0, C3, Cz, C4, Pz, PO7, Oz, PO8 };

inline constexpr double kFlashDuration = 0.100;
inline constexpr double kEpochSeconds = 0.900;

// Comparisons on simulated time tolerate accumulated rounding of tick arithmetic.
inline constexpr double kTimeEps = 1e-9;

using ChannelValues = std::array<double, kNumChannels>;

struct SampleFrame {
  double t{0.0};
  ChannelValues channels{};
};

enum class StimContext : int { Calibration = 1, TaskA = 2, TaskB = 3, Tutorial = 4 };

std::string_view to_string(StimContext c);
StimContext stim_context_from_code(int code);

struct TriggerEvent {
  double t{0.0};
  int target_id{0};
  std::int64_t cycle_index{0};
  StimContext context{StimContext::Calibration};
};

enum class Label { Target, NonTarget, Unknown };

// Error taxonomy. Every failure the engine reports derives from Error so
// callers can catch broadly while tests can pin the exact category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace brainform
