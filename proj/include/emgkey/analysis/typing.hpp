#pragma once

#include "emgkey/core/recording.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace emgkey::analysis {

/// Empirical CDF as (value, cumulative fraction) pairs, values ascending.
/// Repeated values appear once with the fraction at or below them.
using Cdf = std::vector<std::pair<double, double>>;

Cdf empirical_cdf(std::vector<double> values);

/// Smallest value whose cumulative fraction reaches q; nullopt when empty.
std::optional<double> cdf_quantile(const Cdf& cdf, double q);

struct IntervalStats {
  std::vector<double> press_press;  ///< gaps between consecutive presses
  std::vector<double> holds;        ///< press to the matching release
  Cdf press_press_cdf;
  Cdf hold_cdf;
  /// (presses - 1) / (last press - first press) * 60; needs two presses
  /// at distinct times.
  std::optional<double> keys_per_minute;
};

IntervalStats interval_stats(const KeyEventStream& keys);

/// Fraction of zero labels. Throws ConfigError on an empty list.
double class_skew(std::span<const std::uint8_t> labels);

}  // namespace emgkey::analysis
