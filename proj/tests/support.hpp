#pragma once

#include "emgkey/core/segments.hpp"
#include "emgkey/ingest/synth.hpp"
#include "emgkey/preprocess/fuse.hpp"
#include "emgkey/preprocess/segment.hpp"

#include <memory>
#include <string>

namespace emgkey::test {

struct SyntheticSession {
  std::shared_ptr<const FusedStream> stream;
  KeyEventStream keys;
};

/// Fused synthetic recording with its key log.
inline SyntheticSession synthetic_session(std::uint64_t seed, std::size_t keystrokes,
                                          const std::string& participant = "p0",
                                          double snr_db = 20.0) {
  ingest::SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_keystrokes = keystrokes;
  cfg.snr_db = snr_db;
  cfg.meta.participant = participant;
  cfg.meta.recording_id = "r" + std::to_string(seed);
  auto rec = ingest::synthesize(cfg);
  auto fused = preprocess::fuse(rec, {});
  return {std::make_shared<const FusedStream>(std::move(fused.stream)), rec.keys};
}

inline SegmentBatch synthetic_segments(std::uint64_t seed, std::size_t keystrokes,
                                       preprocess::SegmentMode mode,
                                       const std::string& participant = "p0",
                                       double snr_db = 20.0) {
  auto s = synthetic_session(seed, keystrokes, participant, snr_db);
  return preprocess::segment(s.stream, s.keys, {}, mode).batch;
}

}  // namespace emgkey::test
