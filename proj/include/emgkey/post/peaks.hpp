#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace emgkey::post {

struct PeakConfig {
  double min_distance = 0.025;  ///< seconds
  double min_height = 0.5;
  double min_prominence = 0.05;
};

/// Throws ConfigError unless every field is positive and min_distance is at
/// least one sample at `rate`.
void validate(const PeakConfig& cfg, double rate = 200.0);

/// min_distance rounded to whole samples (5 at 200 Hz).
std::size_t distance_samples(const PeakConfig& cfg, double rate = 200.0);

/// Local maxima of x. A plateau counts once, at its first sample; the first
/// and last samples of x are never maxima.
std::vector<std::size_t> local_maxima(std::span<const double> x);

/// Height of x[peak] above the higher of the two lowest points reached when
/// walking left and right until a strictly higher sample or the signal edge.
double prominence(std::span<const double> x, std::size_t peak);

/// Local maxima passing the height and prominence thresholds, thinned so no
/// two survivors are closer than min_distance: candidates are visited by
/// height (ties toward the earlier index) and dropped if a kept peak is too
/// close. Returns sample indices in increasing order.
std::vector<std::size_t> detect_peaks(std::span<const double> probabilities, const PeakConfig& cfg,
                                      double rate = 200.0);

}  // namespace emgkey::post
