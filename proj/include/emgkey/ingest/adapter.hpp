#pragma once

#include "emgkey/ingest/canonical.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace emgkey::ingest {

/// Maps a foreign dataset source to recording drafts. Drafts are resolved and
/// validated by the registry, so an adapter cannot smuggle invalid recordings
/// into the pipeline.
class RecordingAdapter {
 public:
  virtual ~RecordingAdapter() = default;
  [[nodiscard]] virtual std::string_view name() const = 0;
  [[nodiscard]] virtual std::vector<RecordingDraft> read(
      const std::filesystem::path& source) const = 0;
};

/// Reads the canonical layout; `source` is a recording or a dataset root.
class CanonicalAdapter final : public RecordingAdapter {
 public:
  [[nodiscard]] std::string_view name() const override { return "canonical"; }
  [[nodiscard]] std::vector<RecordingDraft> read(
      const std::filesystem::path& source) const override;
};

/// Extension point for the published study archive. Its file schema is not
/// documented in a form this project can rely on, so reading always fails
/// with a DataError that says so.
class ZenodoAdapter final : public RecordingAdapter {
 public:
  [[nodiscard]] std::string_view name() const override { return "zenodo"; }
  [[nodiscard]] std::vector<RecordingDraft> read(
      const std::filesystem::path& source) const override;
};

class AdapterRegistry {
 public:
  /// Registry with the canonical and zenodo adapters.
  static AdapterRegistry with_builtin();

  /// Throws ConfigError when the name is taken.
  void add(std::unique_ptr<RecordingAdapter> adapter);
  [[nodiscard]] bool contains(std::string_view name) const;
  [[nodiscard]] std::vector<std::string> names() const;

  /// Reads through the named adapter and finalizes every draft; the first
  /// invalid recording aborts the load with a DataError.
  [[nodiscard]] std::vector<SensorRecording> load(std::string_view adapter,
                                                  const std::filesystem::path& source) const;

 private:
  std::map<std::string, std::unique_ptr<RecordingAdapter>, std::less<>> adapters_;
};

}  // namespace emgkey::ingest
