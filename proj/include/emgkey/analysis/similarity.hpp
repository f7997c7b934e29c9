#pragma once

#include "emgkey/analysis/dtw.hpp"
#include "emgkey/core/recording.hpp"
#include "emgkey/core/segments.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace emgkey::analysis {

/// A fused stream with the key events it was fused from.
struct FusedRecording {
  FusedStream stream;
  KeyEventStream keys;
};

struct WordSelector {
  std::string word;
  /// Context kept before the first and after the last press, in seconds.
  double before = 0.150;
  double after = 0.100;
};

struct WordOccurrence {
  std::size_t source = 0;       ///< index into the input recordings
  std::size_t first_press = 0;  ///< index into the source's presses
  double start = 0.0;
  double end = 0.0;
  std::string session;
  std::string participant;
  std::string recording;
};

/// Every correctly typed occurrence of the word: its keys pressed
/// consecutively under the recording's layout, preceded by nothing, space
/// or return and followed by nothing, space, return or punctuation.
/// Occurrences whose context leaves the stream are skipped.
std::vector<WordOccurrence> find_word(const FusedRecording& rec, std::size_t source,
                                      const WordSelector& sel);

/// Fused samples of an occurrence, all 28 channels.
MultiSeries extract(const FusedRecording& rec, const WordOccurrence& occ);

enum class Relation { same_session, same_participant, different_participant };

std::string_view to_string(Relation r);

Relation relation(const WordOccurrence& a, const WordOccurrence& b);

struct RelationSummary {
  Relation relation = Relation::same_session;
  std::size_t pairs = 0;
  double mean = 0.0;
};

struct DistanceTable {
  std::vector<WordOccurrence> items;
  std::vector<double> distances;  ///< items x items, symmetric, zero diagonal
  std::vector<RelationSummary> summary;  ///< off-diagonal pairs per relation

  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return distances[i * items.size() + j]; }
};

/// Pairwise DTW distances between all occurrences of the word, parallel
/// over pairs. Empty when the word never occurs.
DistanceTable within_between_report(const std::vector<FusedRecording>& recordings, const WordSelector& sel,
                                    const DtwConfig& cfg = {}, std::size_t jobs = 1);

}  // namespace emgkey::analysis
