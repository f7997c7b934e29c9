#pragma once

#include "emgkey/core/recording.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace emgkey::ingest {

struct RawKeyEvent {
  double time = 0.0;
  std::string key;
  std::string kind;
};

/// A recording before key identifiers are resolved and invariants checked.
/// Adapters for foreign formats produce drafts; `finalize` turns them into
/// validated recordings.
struct RecordingDraft {
  RecordingMeta meta;
  std::vector<SensorStream> streams;
  std::vector<RawKeyEvent> keys;
};

/// Resolves key names and runs validate_recording. Throws DataError listing
/// every violation, or naming the unknown key identifier.
SensorRecording finalize(RecordingDraft draft);

/// Reads the canonical directory layout:
///   meta.json, emg_left.csv, emg_right.csv  (t,e0..e7)
///   imu_left.csv, imu_right.csv             (t,ax,ay,az,gx,gy,gz)
///   keys.csv                                (t,key,kind)
/// Throws DataError naming the file (and line) on any problem.
RecordingDraft read_canonical_draft(const std::filesystem::path& dir);

SensorRecording load_recording(const std::filesystem::path& dir);

/// Writes the canonical layout; floating values use the shortest
/// representation that round-trips exactly.
void save_recording(const SensorRecording& rec, const std::filesystem::path& dir);

nlohmann::json to_json(const RecordingMeta& meta);
/// Throws nlohmann::json::exception or ConfigError on bad fields.
RecordingMeta meta_from_json(const nlohmann::json& j);
/// meta.json of a recording; DataError names the file.
RecordingMeta read_meta(const std::filesystem::path& path);

/// keys.csv (t,key,kind) with names unresolved.
std::vector<RawKeyEvent> read_raw_keys(const std::filesystem::path& path);
/// keys.csv with names resolved; no ordering checks.
KeyEventStream read_keys(const std::filesystem::path& path);
void write_keys(const KeyEventStream& keys, const std::filesystem::path& path);

/// Every directory below `root` (inclusive) that contains a meta.json, sorted.
std::vector<std::filesystem::path> find_recordings(const std::filesystem::path& root);

}  // namespace emgkey::ingest
