#include "emgkey/ingest/adapter.hpp"

#include "emgkey/core/error.hpp"

namespace emgkey::ingest {

std::vector<RecordingDraft> CanonicalAdapter::read(const std::filesystem::path& source) const {
  std::vector<RecordingDraft> drafts;
  for (const auto& dir : find_recordings(source)) drafts.push_back(read_canonical_draft(dir));
  return drafts;
}

std::vector<RecordingDraft> ZenodoAdapter::read(const std::filesystem::path& source) const {
  throw DataError("zenodo adapter: reading " + source.string() +
                  " requires the published format description, which is not bundled; "
                  "convert the archive to the canonical layout or register a custom adapter");
}

AdapterRegistry AdapterRegistry::with_builtin() {
  AdapterRegistry reg;
  reg.add(std::make_unique<CanonicalAdapter>());
  reg.add(std::make_unique<ZenodoAdapter>());
  return reg;
}

void AdapterRegistry::add(std::unique_ptr<RecordingAdapter> adapter) {
  std::string name(adapter->name());
  if (adapters_.contains(name)) throw ConfigError("adapter '" + name + "' already registered");
  adapters_.emplace(std::move(name), std::move(adapter));
}

bool AdapterRegistry::contains(std::string_view name) const {
  return adapters_.find(name) != adapters_.end();
}

std::vector<std::string> AdapterRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : adapters_) out.push_back(name);
  return out;
}

std::vector<SensorRecording> AdapterRegistry::load(std::string_view adapter,
                                                   const std::filesystem::path& source) const {
  auto it = adapters_.find(adapter);
  if (it == adapters_.end()) {
    throw ConfigError("no adapter named '" + std::string(adapter) + "'");
  }
  std::vector<SensorRecording> out;
  for (auto& draft : it->second->read(source)) {
    try {
      out.push_back(finalize(std::move(draft)));
    } catch (const DataError& e) {
      throw DataError("adapter '" + std::string(adapter) + "' rejected: " + e.what());
    }
  }
  return out;
}

}  // namespace emgkey::ingest
