#pragma once

#include "emgkey/core/segments.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace emgkey::nn {

/// One searchable hyperparameter.
struct ParamRange {
  enum class Kind { choice, uniform, log_uniform };
  std::string name;
  Kind kind = Kind::choice;
  std::vector<double> choices;  // choice
  double lo = 0.0;              // uniform / log_uniform
  double hi = 0.0;
};

struct SearchSpace {
  std::vector<ParamRange> params;
};

/// Throws ConfigError for empty choice lists, hi < lo, non-positive
/// log-uniform bounds or duplicate names.
void validate(const SearchSpace& space);

using SampledConfig = std::map<std::string, double>;

/// `count` independent uniform draws from the space; a pure function of the seed.
std::vector<SampledConfig> sample_configs(const SearchSpace& space, std::size_t count,
                                          std::uint64_t seed);

/// Participant-disjoint folds: the sorted distinct ids are shuffled with the
/// seed and dealt round-robin. Throws ConfigError with fewer participants
/// than folds.
std::vector<std::vector<std::string>> participant_folds(std::vector<std::string> participants,
                                                        std::size_t folds, std::uint64_t seed);

/// Validation F1 of a config trained on `train` and scored on `validation`.
using FoldScorer = std::function<double(const SampledConfig& config, const SegmentBatch& train,
                                        const SegmentBatch& validation)>;

struct SearchResult {
  SampledConfig config;
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
};

/// Random search with participant-disjoint cross-validation. Participants are
/// read from the recording metadata of each segment's source. Results are
/// sorted by mean F1, best first (ties keep sampling order). Throws
/// ConfigError with fewer than `folds` (>= 3 by default) participants.
std::vector<SearchResult> hyper_search(const SearchSpace& space, std::size_t count,
                                       const SegmentBatch& data, const FoldScorer& scorer,
                                       std::uint64_t seed, std::size_t folds = 3);

}  // namespace emgkey::nn
