#pragma once

#include "emgkey/arch/builders.hpp"
#include "emgkey/core/recording.hpp"
#include "emgkey/ingest/synth.hpp"
#include "emgkey/nn/train.hpp"
#include "emgkey/post/peaks.hpp"
#include "emgkey/preprocess/fuse.hpp"
#include "emgkey/preprocess/segment.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace emgkey::cli {

/// Synthetic dataset layout: participants x sessions x recordings.
struct SynthPlan {
  std::size_t participants = 4;
  std::size_t sessions = 1;
  std::size_t recordings = 1;
  /// Template of every recording; seeds, banks and metadata are filled in
  /// per recording.
  ingest::SynthConfig base;
  /// Typed text; empty means random keys.
  std::string text;
  /// Task types cycled over the recordings of a session.
  std::vector<TaskType> tasks{TaskType::synthetic};
  /// Typing styles cycled over participants.
  std::vector<TypingStyle> styles{TypingStyle::unknown};
};

struct ModelSection {
  arch::Architecture architecture = arch::Architecture::crnn;
  nn::Head head = nn::Head::binary;
  arch::ResNet11Options resnet11;
  arch::ResNet18Options resnet18;
  arch::CrnnOptions crnn;
  arch::WaveNetOptions wavenet;
};

struct EvalSection {
  double tolerance = 0.050;
  std::vector<double> tolerances{0.0, 0.005, 0.010, 0.015, 0.020, 0.025, 0.030, 0.035, 0.040, 0.045, 0.050};
  post::PeakConfig peaks;
  std::vector<int> topn{1, 3, 5};
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::filesystem::path output = "out";
  /// Dataset roots; empty means <output>/data.
  std::vector<std::filesystem::path> roots;
  std::string adapter = "canonical";
  /// Participants held out for evaluation; empty means the last one in
  /// sorted order (when there are at least two).
  std::vector<std::string> test_participants;

  SynthPlan synth;
  preprocess::FuseOptions fuse;
  preprocess::SegmentationConfig segmentation;
  std::vector<Modality> sensors{Modality::emg, Modality::acc, Modality::gyro};
  ModelSection model;
  nn::TrainConfig train;
  EvalSection eval;
  std::string word = "zeit";

  [[nodiscard]] std::vector<std::filesystem::path> dataset_roots() const;
};

/// "section.key=value" overrides applied after the file is read.
using Override = std::pair<std::string, std::string>;
Override parse_override(const std::string& text);

/// Reads the INI-style experiment file. Relative paths resolve against the
/// file's directory. Unknown sections or keys, malformed values and
/// violated invariants throw ConfigError naming the key.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<Override>& overrides = {});

/// Same, from text; relative paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::vector<Override>& overrides = {});

/// Everything that influences results; paths are left out so that the same
/// experiment written to another directory hashes identically.
nlohmann::json to_json(const ExperimentConfig& cfg);

std::string config_hash(const ExperimentConfig& cfg);

/// "emg+acc+gyro" in canonical order.
std::string sensor_label(const std::vector<Modality>& sensors);

/// "crnn_binary_emg+acc+gyro".
std::string model_tag(const ExperimentConfig& cfg);

nn::NetSpec build_network(const ModelSection& m);

}  // namespace emgkey::cli
