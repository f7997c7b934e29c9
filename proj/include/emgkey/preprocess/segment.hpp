#pragma once

#include "emgkey/core/recording.hpp"
#include "emgkey/core/segments.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace emgkey::preprocess {

struct SegmentationConfig {
  double before = 0.150;
  double after = 0.100;
  double rate = 200.0;
  /// Grid stride for binary negatives and sliding windows.
  std::size_t stride = 1;
};

struct WindowGeometry {
  std::size_t length = 0;
  std::size_t press_index = 0;
};

/// Window length and press index in samples; throws ConfigError unless
/// before, after > 0 and (before + after) * rate is an integer.
WindowGeometry geometry(const SegmentationConfig& cfg);

enum class SegmentMode { binary, multiclass, sliding };

struct SegmentationResult {
  SegmentBatch batch;
  /// Presses whose window would leave the stream.
  std::size_t skipped = 0;
};

/// Cuts windows with the press at `press_index` (30 by default).
///
/// multiclass: one window per in-bounds press, labelled with the key ordinal.
/// binary: the press windows (label 1) plus one window centred on every
///   stride-th grid sample further than one sample from any press (label 0),
///   all in time order.
/// sliding: one unlabelled window per stride-th grid sample whose window fits.
SegmentationResult segment(std::shared_ptr<const FusedStream> stream, const KeyEventStream& keys,
                           const SegmentationConfig& cfg, SegmentMode mode);

/// Per-grid-sample labels (1 at the nearest sample of each press).
std::vector<std::uint8_t> binary_label_stream(const FusedStream& stream,
                                              const KeyEventStream& keys);

/// w_k = N / (K * n_k) for the K classes present, 0 for absent classes, so
/// the sample-weighted mean of the weights is 1. Throws ConfigError for an
/// empty list or labels outside [0, n_classes).
std::vector<double> class_weights(std::span<const int> labels, int n_classes = 52);

/// All positives plus an equally sized uniform draw of negatives (all
/// negatives if there are fewer), sorted ascending. The draw is a pure
/// function of (seed, call_index). Throws ConfigError without positives.
std::vector<std::size_t> subsample_majority(std::span<const std::uint8_t> labels,
                                            std::uint64_t seed, std::uint64_t call_index);

}  // namespace emgkey::preprocess
