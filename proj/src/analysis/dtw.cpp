#include "emgkey/analysis/dtw.hpp"

#include "emgkey/core/error.hpp"

#include <cmath>
#include <limits>

namespace emgkey::analysis {

MultiSeries zscore(const MultiSeries& s) {
  MultiSeries out = s;
  const auto n = s.length();
  for (std::size_t c = 0; c < s.channels; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += s.at(c, i);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (s.at(c, i) - mean) * (s.at(c, i) - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) {
      out.values[c * n + i] = sd > 0.0 ? (s.at(c, i) - mean) / sd : 0.0;
    }
  }
  return out;
}

double point_distance(const MultiSeries& a, std::size_t i, const MultiSeries& b, std::size_t j) {
  double sq = 0.0;
  for (std::size_t c = 0; c < a.channels; ++c) {
    const double d = a.at(c, i) - b.at(c, j);
    sq += d * d;
  }
  return std::sqrt(sq);
}

DtwResult dtw(const MultiSeries& a_in, const MultiSeries& b_in, const DtwConfig& cfg) {
  if (a_in.channels != b_in.channels) throw ShapeError("dtw: channel counts differ");
  if (a_in.channels == 0 || a_in.length() == 0 || b_in.length() == 0) {
    throw ShapeError("dtw: series must have at least one channel and one sample");
  }
  if (a_in.values.size() % a_in.channels != 0 || b_in.values.size() % b_in.channels != 0) {
    throw ShapeError("dtw: value count is not a multiple of the channel count");
  }
  const MultiSeries a = cfg.z_normalize ? zscore(a_in) : a_in;
  const MultiSeries b = cfg.z_normalize ? zscore(b_in) : b_in;
  const auto n = a.length();
  const auto m = b.length();

  struct Cell {
    double cost;
    std::size_t len;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Cell> prev(m, {inf, 0}), cur(m, {inf, 0});
  auto better = [](const Cell& x, const Cell& y) {
    return x.cost < y.cost || (x.cost == y.cost && x.len < y.len);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = point_distance(a, i, b, j);
      if (i == 0 && j == 0) {
        cur[j] = {d, 1};
        continue;
      }
      Cell best{inf, 0};
      if (i > 0 && j > 0 && better(prev[j - 1], best)) best = prev[j - 1];
      if (i > 0 && better(prev[j], best)) best = prev[j];
      if (j > 0 && better(cur[j - 1], best)) best = cur[j - 1];
      cur[j] = {best.cost + d, best.len + 1};
    }
    std::swap(prev, cur);
  }
  const auto& end = prev[m - 1];
  DtwResult r{end.cost, end.len, end.cost};
  if (cfg.path_normalize) r.distance = end.cost / static_cast<double>(end.len);
  return r;
}

}  // namespace emgkey::analysis
