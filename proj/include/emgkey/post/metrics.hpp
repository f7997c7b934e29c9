#pragma once

#include "emgkey/post/matching.hpp"
#include "emgkey/post/peaks.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace emgkey::post {

/// Standard rates; a ratio with a zero denominator is absent.
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> balanced_accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> specificity;
  std::optional<double> f1;
};

Metrics metrics(const TolerantConfusion& c);

/// Fraction of rows of `probabilities` (n x 52, row-major) whose true class
/// ranks among the n best. Equal scores rank the lower ordinal first.
/// Throws ConfigError for n outside 1..52 and ShapeError on size mismatch.
double topn_accuracy(std::span<const double> probabilities, std::span<const int> truth, int n);

/// Rank of the true class (0 = best) under the same tie rule.
std::size_t true_class_rank(std::span<const double> row, int truth);

struct LagStats {
  std::size_t count = 0;
  std::optional<double> mean;
  std::optional<double> sd;  ///< sample standard deviation, needs two matches
};

/// Statistics of prediction - truth over matched pairs.
LagStats lag_stats(const TolerantConfusion& c);

struct SweepPoint {
  double tolerance = 0.0;
  TolerantConfusion confusion;
  Metrics metrics;
  LagStats lags;
};

/// Sliding-window probabilities on a regular grid: sample i sits at t0 + i / rate.
struct ProbabilityTrack {
  double t0 = 0.0;
  double rate = 200.0;
  std::vector<double> values;

  [[nodiscard]] double time(std::size_t i) const { return t0 + static_cast<double>(i) / rate; }
};

/// Peak times of the track.
std::vector<double> detect_peak_times(const ProbabilityTrack& track, const PeakConfig& cfg);

/// Detects peaks once, then scores them against `truth` at every tolerance
/// (parallel over tolerances). The negative universe is the track length.
std::vector<SweepPoint> tolerance_sweep(const ProbabilityTrack& track, std::span<const double> truth,
                                        std::span<const double> tolerances, const PeakConfig& cfg,
                                        std::size_t jobs = 1);

}  // namespace emgkey::post
