#pragma once

#include "emgkey/cli/config.hpp"
#include "emgkey/core/segments.hpp"

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace emgkey::cli {

struct RunContext {
  ExperimentConfig cfg;
  std::string hash;
  std::size_t jobs = 1;
  std::ostream* log = nullptr;

  explicit RunContext(ExperimentConfig c, std::size_t jobs = 1, std::ostream* log = nullptr);
};

/// A preprocessed recording as stored under <output>/fused/<id>/.
struct StoredRecording {
  std::string id;
  std::shared_ptr<const FusedStream> stream;
  KeyEventStream keys;
};

void save_fused(const std::filesystem::path& dir, const FusedStream& stream, const KeyEventStream& keys,
                const nlohmann::json& info);
StoredRecording load_fused(const std::filesystem::path& dir, const std::string& id);

/// Every stored recording, ordered by id.
std::vector<StoredRecording> load_all_fused(const RunContext& ctx);

/// Held-out participants under the configured split rule.
std::vector<std::string> test_participants(const ExperimentConfig& cfg, const std::vector<StoredRecording>& recs);

/// Writes <output>/data/<participant>/<session>/<recording>/.
void run_synth(const RunContext& ctx);
/// Fuses every dataset recording into <output>/fused/<id>/.
void run_preprocess(const RunContext& ctx);
/// Trains on the non-held-out participants; writes <output>/models/<tag>.emgk.
void run_train(const RunContext& ctx);
/// Scores the held-out recordings; writes <output>/eval/<tag>/.
void run_eval(const RunContext& ctx);
/// Tolerance curves from the stored binary predictions.
void run_sweep(const RunContext& ctx);
/// Typing statistics, class skew and DTW similarity; writes <output>/analysis/.
void run_analyze(const RunContext& ctx);
/// Aggregates every evaluation under <output>/eval into <output>/report/.
void run_report(const RunContext& ctx);

/// Exit status for an exception: 1 configuration or usage, 2 data,
/// 3 numeric failure.
int exit_code(const std::exception& e);
/// "config_error", "data_error", "numeric_error".
std::string error_code(const std::exception& e);

}  // namespace emgkey::cli
