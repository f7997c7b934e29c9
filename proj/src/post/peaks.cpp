#include "emgkey/post/peaks.hpp"

#include "emgkey/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace emgkey::post {

void validate(const PeakConfig& cfg, double rate) {
  if (!(cfg.min_distance > 0.0) || !(cfg.min_height > 0.0) || !(cfg.min_prominence > 0.0)) {
    throw ConfigError("peak config: min_distance, min_height and min_prominence must be positive");
  }
  if (!(rate > 0.0) || cfg.min_distance * rate < 0.5) {
    throw ConfigError("peak config: min_distance is shorter than one sample");
  }
}

std::size_t distance_samples(const PeakConfig& cfg, double rate) {
  validate(cfg, rate);
  return static_cast<std::size_t>(std::llround(cfg.min_distance * rate));
}

std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> out;
  const auto n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      auto j = i;
      while (j + 1 < n && x[j + 1] == x[i]) ++j;
      if (j + 1 < n && x[j + 1] < x[i]) {
        out.push_back(i);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

double prominence(std::span<const double> x, std::size_t peak) {
  const double h = x[peak];
  double left = h;
  for (auto i = peak; i-- > 0 && x[i] <= h;) left = std::min(left, x[i]);
  double right = h;
  for (auto i = peak + 1; i < x.size() && x[i] <= h; ++i) right = std::min(right, x[i]);
  return h - std::max(left, right);
}

std::vector<std::size_t> detect_peaks(std::span<const double> probabilities, const PeakConfig& cfg,
                                      double rate) {
  const auto dist = distance_samples(cfg, rate);
  std::vector<std::size_t> cand;
  for (auto i : local_maxima(probabilities)) {
    if (probabilities[i] >= cfg.min_height && prominence(probabilities, i) >= cfg.min_prominence) {
      cand.push_back(i);
    }
  }
  std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
    return probabilities[a] > probabilities[b];
  });
  std::vector<std::size_t> kept;
  std::vector<bool> blocked(probabilities.size(), false);
  for (auto c : cand) {
    if (blocked[c]) continue;
    kept.push_back(c);
    const auto lo = c >= dist - 1 ? c - (dist - 1) : 0;
    const auto hi = std::min(probabilities.size(), c + dist);
    std::fill(blocked.begin() + static_cast<std::ptrdiff_t>(lo),
              blocked.begin() + static_cast<std::ptrdiff_t>(hi), true);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace emgkey::post
