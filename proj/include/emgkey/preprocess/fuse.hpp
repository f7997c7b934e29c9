#pragma once

#include "emgkey/core/error.hpp"
#include "emgkey/core/recording.hpp"
#include "emgkey/core/segments.hpp"
#include "emgkey/preprocess/signal.hpp"

#include <optional>

namespace emgkey::preprocess {

struct AlignmentResult {
  /// Right-stream time minus left-stream time at the clap, seconds.
  double lag = 0.0;
  /// Peak-to-median magnitude ratio of the weaker side.
  double confidence = 0.0;
};

/// Raised when either accelerometer lacks a dominant magnitude peak.
class NoClapError : public DataError {
 public:
  using DataError::DataError;
};

/// Minimum peak-to-median magnitude ratio accepted as a clap.
inline constexpr double kClapDominance = 5.0;

/// Lag between the armbands from the accelerometer-magnitude argmax of each
/// side. Throws NoClapError when a side's peak is below 5x its median.
AlignmentResult detect_clap_lag(const SensorStream& left_acc, const SensorStream& right_acc);

struct FuseOptions {
  FilterConfig filter;
  bool align = false;
  /// Replace device timestamps with an evenly spaced grid at the estimated
  /// rate before anything else.
  bool regularize = true;
  double rate = 200.0;
};

struct FuseResult {
  FusedStream stream;
  /// Set when alignment was requested and a clap was found.
  std::optional<AlignmentResult> alignment;
};

/// Filters EMG (if configured), optionally shifts the right arm by -lag, and
/// interpolates all six streams onto one common grid spanning the overlap of
/// every stream. The IMU is thereby upsampled to the EMG rate.
FuseResult fuse(const SensorRecording& rec, const FuseOptions& opts);

}  // namespace emgkey::preprocess
