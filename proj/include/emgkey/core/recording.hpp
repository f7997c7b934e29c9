#pragma once

#include "emgkey/core/keys.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emgkey {

enum class Modality { emg, acc, gyro };
enum class Side { left, right };

enum class TaskType {
  text,
  pangram,
  random,
  random_memorized,
  game,
  insecure,
  xkcd,
  pwgen,
  random_pw,
  synthetic
};

enum class TypingStyle { touch, hybrid, unknown };

enum class KeyKind { press, release };

/// Channels per modality: 8 for EMG, 3 for accelerometer and gyroscope.
std::size_t expected_channels(Modality modality);
/// Nominal device rate in Hz: 200 for EMG, 50 for the IMU.
double nominal_rate(Modality modality);

/// One modality of one armband. Values are channel-major:
/// values[c * samples() + i] is channel c at timestamps[i].
struct SensorStream {
  Modality modality = Modality::emg;
  Side side = Side::left;
  std::size_t channels = 0;
  std::vector<double> timestamps;
  std::vector<double> values;

  [[nodiscard]] std::size_t samples() const { return timestamps.size(); }
  [[nodiscard]] std::span<const double> channel(std::size_t c) const {
    return {values.data() + c * samples(), samples()};
  }
  [[nodiscard]] double at(std::size_t c, std::size_t i) const {
    return values[c * samples() + i];
  }
  [[nodiscard]] double span_seconds() const {
    return timestamps.empty() ? 0.0 : timestamps.back() - timestamps.front();
  }
};

struct KeyEvent {
  double time = 0.0;
  PhysKey key = PhysKey::from_ordinal(0);
  KeyKind kind = KeyKind::press;

  friend bool operator==(const KeyEvent&, const KeyEvent&) = default;
};

struct KeyEventStream {
  std::vector<KeyEvent> events;

  [[nodiscard]] std::vector<KeyEvent> presses() const;
  [[nodiscard]] std::vector<double> press_times() const;
};

struct RecordingMeta {
  std::string session_id;
  std::string recording_id;
  std::string participant;
  TaskType task_type = TaskType::synthetic;
  Layout layout = Layout::de;
  TypingStyle typing_style = TypingStyle::unknown;
};

/// Six sensor streams (EMG, accelerometer, gyroscope for both arms) plus the
/// ground-truth key events of one recording. Times are seconds relative to
/// the recording start.
struct SensorRecording {
  RecordingMeta meta;
  std::vector<SensorStream> streams;
  KeyEventStream keys;

  /// Throws DataError when the stream is absent.
  [[nodiscard]] const SensorStream& stream(Modality modality, Side side) const;
  [[nodiscard]] SensorStream& stream(Modality modality, Side side);
};

std::string_view to_string(Modality modality);
std::string_view to_string(Side side);
std::string_view to_string(TaskType task);
std::string_view to_string(TypingStyle style);
std::string_view to_string(KeyKind kind);

TaskType parse_task_type(std::string_view text);
TypingStyle parse_typing_style(std::string_view text);
KeyKind parse_key_kind(std::string_view text);

}  // namespace emgkey
