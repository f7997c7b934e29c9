#include "emgkey/ingest/canonical.hpp"

#include "emgkey/core/csv.hpp"
#include "emgkey/core/error.hpp"
#include "emgkey/core/validate.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <string_view>

namespace emgkey::ingest {
namespace fs = std::filesystem;
using namespace emgkey::csv;
namespace {

const std::vector<std::string> kEmgHeader{"t", "e0", "e1", "e2", "e3", "e4", "e5", "e6", "e7"};
const std::vector<std::string> kImuHeader{"t", "ax", "ay", "az", "gx", "gy", "gz"};
const std::vector<std::string> kKeysHeader{"t", "key", "kind"};

SensorStream make_stream(Modality m, Side side, const std::vector<double>& t,
                         const std::vector<std::vector<double>>& cols, std::size_t first,
                         std::size_t count) {
  SensorStream s;
  s.modality = m;
  s.side = side;
  s.channels = count;
  s.timestamps = t;
  s.values.reserve(count * t.size());
  for (std::size_t c = first; c < first + count; ++c) {
    s.values.insert(s.values.end(), cols[c].begin(), cols[c].end());
  }
  return s;
}

std::string stream_csv(const std::vector<const SensorStream*>& parts,
                       const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  const auto& t = parts.front()->timestamps;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += format_double(t[i]);
    for (const auto* s : parts) {
      for (std::size_t c = 0; c < s->channels; ++c) {
        out += ',';
        out += format_double(s->at(c, i));
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const RecordingMeta& meta) {
  return {
      {"session_id", meta.session_id},
      {"recording_id", meta.recording_id},
      {"participant", meta.participant},
      {"task_type", std::string(to_string(meta.task_type))},
      {"layout", std::string(to_string(meta.layout))},
      {"typing_style", std::string(to_string(meta.typing_style))},
  };
}

RecordingMeta meta_from_json(const nlohmann::json& j) {
  RecordingMeta meta;
  meta.session_id = j.at("session_id").get<std::string>();
  meta.recording_id = j.at("recording_id").get<std::string>();
  meta.participant = j.at("participant").get<std::string>();
  meta.task_type = parse_task_type(j.at("task_type").get<std::string>());
  meta.layout = parse_layout(j.at("layout").get<std::string>());
  meta.typing_style = parse_typing_style(j.at("typing_style").get<std::string>());
  return meta;
}

RecordingMeta read_meta(const fs::path& path) {
  try {
    return meta_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<RawKeyEvent> read_raw_keys(const fs::path& path) {
  std::vector<RawKeyEvent> keys;
  const auto text = read_text(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw DataError(path.string() + ": empty file");
  check_header(lines[0], kKeysHeader, path);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split(lines[li], ',');
    if (fields.size() != 3) {
      throw DataError(path.string() + ":" + std::to_string(li + 1) + ": expected 3 fields");
    }
    keys.push_back({parse_double(fields[0], path, li + 1), std::string(fields[1]), std::string(fields[2])});
  }
  return keys;
}

KeyEventStream read_keys(const fs::path& path) {
  KeyEventStream out;
  for (const auto& k : read_raw_keys(path)) {
    try {
      out.events.push_back({k.time, PhysKey::parse(k.key), parse_key_kind(k.kind)});
    } catch (const std::runtime_error& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_keys(const KeyEventStream& keys, const fs::path& path) {
  std::string out = "t,key,kind\n";
  for (const auto& e : keys.events) {
    out += format_double(e.time) + "," + std::string(e.key.name()) + "," + std::string(to_string(e.kind)) + "\n";
  }
  write_text(path, out);
}

SensorRecording finalize(RecordingDraft draft) {
  SensorRecording rec;
  rec.meta = std::move(draft.meta);
  rec.streams = std::move(draft.streams);
  rec.keys.events.reserve(draft.keys.size());
  for (const auto& k : draft.keys) {
    rec.keys.events.push_back({k.time, PhysKey::parse(k.key), parse_key_kind(k.kind)});
  }
  const auto violations = validate_recording(rec);
  if (!violations.empty()) {
    throw DataError("recording " + rec.meta.recording_id + " invalid: " + describe(violations));
  }
  return rec;
}

RecordingDraft read_canonical_draft(const fs::path& dir) {
  RecordingDraft draft;
  const auto meta_path = dir / "meta.json";
  draft.meta = read_meta(meta_path);

  for (auto side : {Side::left, Side::right}) {
    const std::string suffix = side == Side::left ? "left" : "right";
    const auto emg = read_numeric(dir / ("emg_" + suffix + ".csv"), kEmgHeader);
    draft.streams.push_back(make_stream(Modality::emg, side, emg.t, emg.cols, 0, 8));
    const auto imu = read_numeric(dir / ("imu_" + suffix + ".csv"), kImuHeader);
    draft.streams.push_back(make_stream(Modality::acc, side, imu.t, imu.cols, 0, 3));
    draft.streams.push_back(make_stream(Modality::gyro, side, imu.t, imu.cols, 3, 3));
  }

  draft.keys = read_raw_keys(dir / "keys.csv");
  return draft;
}

SensorRecording load_recording(const fs::path& dir) {
  return finalize(read_canonical_draft(dir));
}

void save_recording(const SensorRecording& rec, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "meta.json", to_json(rec.meta).dump(2) + "\n");
  for (auto side : {Side::left, Side::right}) {
    const std::string suffix = side == Side::left ? "left" : "right";
    write_text(dir / ("emg_" + suffix + ".csv"),
               stream_csv({&rec.stream(Modality::emg, side)}, kEmgHeader));
    const auto& acc = rec.stream(Modality::acc, side);
    const auto& gyro = rec.stream(Modality::gyro, side);
    if (acc.timestamps != gyro.timestamps) {
      throw DataError("save_recording: accelerometer and gyroscope timestamps differ");
    }
    write_text(dir / ("imu_" + suffix + ".csv"), stream_csv({&acc, &gyro}, kImuHeader));
  }
  write_keys(rec.keys, dir / "keys.csv");
}

std::vector<fs::path> find_recordings(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) throw DataError(root.string() + ": dataset root does not exist");
  if (fs::exists(root / "meta.json")) out.push_back(root);
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
        out.push_back(entry.path());
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace emgkey::ingest
