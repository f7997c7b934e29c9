#include "emgkey/core/recording.hpp"

#include "emgkey/core/error.hpp"

#include <array>
#include <utility>

namespace emgkey {
namespace {

constexpr std::array<std::pair<TaskType, std::string_view>, 10> kTaskNames{{
    {TaskType::text, "text"},
    {TaskType::pangram, "pangram"},
    {TaskType::random, "random"},
    {TaskType::random_memorized, "random_memorized"},
    {TaskType::game, "game"},
    {TaskType::insecure, "insecure"},
    {TaskType::xkcd, "xkcd"},
    {TaskType::pwgen, "pwgen"},
    {TaskType::random_pw, "random_pw"},
    {TaskType::synthetic, "synthetic"},
}};

}  // namespace

std::size_t expected_channels(Modality modality) {
  return modality == Modality::emg ? 8 : 3;
}

double nominal_rate(Modality modality) {
  return modality == Modality::emg ? 200.0 : 50.0;
}

std::vector<KeyEvent> KeyEventStream::presses() const {
  std::vector<KeyEvent> out;
  for (const auto& e : events) {
    if (e.kind == KeyKind::press) out.push_back(e);
  }
  return out;
}

std::vector<double> KeyEventStream::press_times() const {
  std::vector<double> out;
  for (const auto& e : events) {
    if (e.kind == KeyKind::press) out.push_back(e.time);
  }
  return out;
}

const SensorStream& SensorRecording::stream(Modality modality, Side side) const {
  for (const auto& s : streams) {
    if (s.modality == modality && s.side == side) return s;
  }
  throw DataError("recording " + meta.recording_id + " has no " +
                  std::string(to_string(modality)) + "/" + std::string(to_string(side)) +
                  " stream");
}

SensorStream& SensorRecording::stream(Modality modality, Side side) {
  const auto& self = *this;
  return const_cast<SensorStream&>(self.stream(modality, side));
}

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::emg: return "EMG";
    case Modality::acc: return "ACC";
    case Modality::gyro: return "GYRO";
  }
  return "?";
}

std::string_view to_string(Side side) { return side == Side::left ? "left" : "right"; }

std::string_view to_string(TaskType task) {
  for (const auto& [t, name] : kTaskNames) {
    if (t == task) return name;
  }
  return "?";
}

std::string_view to_string(TypingStyle style) {
  switch (style) {
    case TypingStyle::touch: return "touch";
    case TypingStyle::hybrid: return "hybrid";
    case TypingStyle::unknown: return "unknown";
  }
  return "?";
}

std::string_view to_string(KeyKind kind) {
  return kind == KeyKind::press ? "press" : "release";
}

TaskType parse_task_type(std::string_view text) {
  for (const auto& [t, name] : kTaskNames) {
    if (name == text) return t;
  }
  throw DataError("unknown task type '" + std::string(text) + "'");
}

TypingStyle parse_typing_style(std::string_view text) {
  if (text == "touch") return TypingStyle::touch;
  if (text == "hybrid") return TypingStyle::hybrid;
  if (text == "unknown") return TypingStyle::unknown;
  throw DataError("unknown typing style '" + std::string(text) + "'");
}

KeyKind parse_key_kind(std::string_view text) {
  if (text == "press") return KeyKind::press;
  if (text == "release") return KeyKind::release;
  throw DataError("unknown key event kind '" + std::string(text) + "'");
}

}  // namespace emgkey
