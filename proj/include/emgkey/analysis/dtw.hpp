#pragma once

#include <cstddef>
#include <vector>

namespace emgkey::analysis {

/// Multichannel series, channel-major: values[c * length() + i].
struct MultiSeries {
  std::size_t channels = 0;
  std::vector<double> values;

  [[nodiscard]] std::size_t length() const { return channels == 0 ? 0 : values.size() / channels; }
  [[nodiscard]] double at(std::size_t c, std::size_t i) const { return values[c * length() + i]; }
};

/// Dependent multivariate DTW: one warping path shared by all channels,
/// Euclidean distance between time points.
struct DtwConfig {
  /// Standardise each channel of each series to zero mean and unit variance
  /// (constant channels become zero).
  bool z_normalize = true;
  /// Divide the optimal path cost by the number of points on that path.
  bool path_normalize = true;
};

MultiSeries zscore(const MultiSeries& s);

/// Euclidean distance between a[:, i] and b[:, j].
double point_distance(const MultiSeries& a, std::size_t i, const MultiSeries& b, std::size_t j);

struct DtwResult {
  double cost = 0.0;          ///< summed point distances along the path
  std::size_t path_length = 0;
  double distance = 0.0;      ///< cost, or cost / path_length when normalised
};

/// Classic DTW with steps (1,0), (0,1), (1,1) from (0,0) to (n-1, m-1).
/// Among minimum-cost paths the shortest is taken. Throws ShapeError when
/// channel counts differ or a series is empty.
DtwResult dtw(const MultiSeries& a, const MultiSeries& b, const DtwConfig& cfg = {});

inline double dtw_distance(const MultiSeries& a, const MultiSeries& b, const DtwConfig& cfg = {}) {
  return dtw(a, b, cfg).distance;
}

}  // namespace emgkey::analysis
