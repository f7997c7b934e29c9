#include "emgkey/core/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace emgkey {
namespace {

std::string stream_field(const SensorStream& s) {
  return std::string(to_string(s.modality)) + "_" + std::string(to_string(s.side));
}

void check_stream(const SensorStream& s, std::vector<Violation>& out) {
  const auto field = stream_field(s);
  const auto expected = expected_channels(s.modality);
  if (s.channels != expected) {
    out.push_back({field, "channels.count",
                   "has " + std::to_string(s.channels) + " channels, expected " +
                       std::to_string(expected)});
  }
  if (s.values.size() != s.channels * s.timestamps.size()) {
    out.push_back({field, "values.shape",
                   std::to_string(s.values.size()) + " values for " +
                       std::to_string(s.timestamps.size()) + " rows of " +
                       std::to_string(s.channels) + " channels"});
  }
  if (s.timestamps.empty()) {
    out.push_back({field, "timestamps.empty", "no samples"});
  }
  for (std::size_t i = 1; i < s.timestamps.size(); ++i) {
    if (!(s.timestamps[i] > s.timestamps[i - 1])) {
      out.push_back({field, "timestamps.monotonic",
                     "row " + std::to_string(i) + " not after previous row"});
      break;
    }
  }
  const bool finite =
      std::all_of(s.values.begin(), s.values.end(), [](double v) { return std::isfinite(v); }) &&
      std::all_of(s.timestamps.begin(), s.timestamps.end(),
                  [](double v) { return std::isfinite(v); });
  if (!finite) out.push_back({field, "values.finite", "non-finite sample"});
}

}  // namespace

std::vector<Violation> validate_recording(const SensorRecording& rec) {
  std::vector<Violation> out;

  std::map<std::pair<Modality, Side>, int> seen;
  for (const auto& s : rec.streams) {
    if (++seen[{s.modality, s.side}] == 2) {
      out.push_back({stream_field(s), "stream.duplicate", "stream present twice"});
    }
    check_stream(s, out);
  }
  for (auto m : {Modality::emg, Modality::acc, Modality::gyro}) {
    for (auto side : {Side::left, Side::right}) {
      if (!seen.contains({m, side})) {
        out.push_back({std::string(to_string(m)) + "_" + std::string(to_string(side)),
                       "stream.missing", "stream absent"});
      }
    }
  }

  double span_lo = std::numeric_limits<double>::infinity();
  double span_hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : rec.streams) {
    if (s.timestamps.empty()) continue;
    span_lo = std::min(span_lo, s.timestamps.front());
    span_hi = std::max(span_hi, s.timestamps.back());
  }

  const auto& events = rec.keys.events;
  std::map<int, int> down;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string where = "keys[" + std::to_string(i) + "]";
    if (i > 0 && e.time < events[i - 1].time) {
      out.push_back({where, "keys.order", "event earlier than its predecessor"});
    }
    if (!key_in_layout(e.key, rec.meta.layout)) {
      out.push_back({where, "keys.layout",
                     std::string(e.key.name()) + " not used by layout " +
                         std::string(to_string(rec.meta.layout))});
    }
    if (!(e.time >= span_lo && e.time <= span_hi)) {
      out.push_back({where, "keys.span", "event outside the sensor time span"});
    }
    auto& count = down[e.key.ordinal()];
    if (e.kind == KeyKind::press) {
      ++count;
    } else if (count == 0) {
      out.push_back({where, "keys.orphan_release",
                     std::string(e.key.name()) + " released without prior press"});
    } else {
      count = 0;
    }
  }
  return out;
}

std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i > 0) os << "; ";
    os << violations[i].field << ": " << violations[i].rule << " (" << violations[i].detail
       << ")";
  }
  return os.str();
}

}  // namespace emgkey
