#include "emgkey/post/metrics.hpp"

#include "emgkey/core/error.hpp"
#include "emgkey/core/keys.hpp"
#include "emgkey/core/parallel.hpp"

#include <cmath>
#include <string>

namespace emgkey::post {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics(const TolerantConfusion& c) {
  Metrics m;
  m.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  if (m.recall && m.specificity) m.balanced_accuracy = (*m.recall + *m.specificity) / 2.0;
  if (m.precision && m.recall) {
    // Harmonic mean written so that P = R = 0 gives 0.
    m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  }
  return m;
}

std::size_t true_class_rank(std::span<const double> row, int truth) {
  if (row.size() != static_cast<std::size_t>(kKeyCount)) {
    throw ShapeError("top-n: probability rows must have 52 entries");
  }
  if (truth < 0 || truth >= kKeyCount) throw DataError("top-n: true ordinal outside 0..51");
  const double p = row[static_cast<std::size_t>(truth)];
  std::size_t rank = 0;
  for (int k = 0; k < kKeyCount; ++k) {
    const double q = row[static_cast<std::size_t>(k)];
    if (q > p || (q == p && k < truth)) ++rank;
  }
  return rank;
}

double topn_accuracy(std::span<const double> probabilities, std::span<const int> truth, int n) {
  if (n < 1 || n > kKeyCount) throw ConfigError("top-n: n must lie in 1..52, got " + std::to_string(n));
  const auto k = static_cast<std::size_t>(kKeyCount);
  if (probabilities.size() != truth.size() * k) {
    throw ShapeError("top-n: expected " + std::to_string(truth.size()) + " rows of 52 probabilities");
  }
  if (truth.empty()) throw DataError("top-n: no keystrokes");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (true_class_rank(probabilities.subspan(i * k, k), truth[i]) < static_cast<std::size_t>(n)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

LagStats lag_stats(const TolerantConfusion& c) {
  LagStats s;
  s.count = c.matches.size();
  if (s.count == 0) return s;
  double sum = 0.0;
  for (const auto& m : c.matches) sum += m.lag;
  const double mean = sum / static_cast<double>(s.count);
  s.mean = mean;
  if (s.count > 1) {
    double sq = 0.0;
    for (const auto& m : c.matches) sq += (m.lag - mean) * (m.lag - mean);
    s.sd = std::sqrt(sq / static_cast<double>(s.count - 1));
  }
  return s;
}

std::vector<double> detect_peak_times(const ProbabilityTrack& track, const PeakConfig& cfg) {
  std::vector<double> out;
  for (auto i : detect_peaks(track.values, cfg, track.rate)) out.push_back(track.time(i));
  return out;
}

std::vector<SweepPoint> tolerance_sweep(const ProbabilityTrack& track, std::span<const double> truth,
                                        std::span<const double> tolerances, const PeakConfig& cfg,
                                        std::size_t jobs) {
  for (double t : tolerances) validate(MatchConfig{t});
  const auto peaks = detect_peak_times(track, cfg);
  std::vector<SweepPoint> out(tolerances.size());
  parallel_for(tolerances.size(), jobs, [&](std::size_t i) {
    auto& pt = out[i];
    pt.tolerance = tolerances[i];
    pt.confusion = tolerant_confusion(truth, peaks, track.values.size(), MatchConfig{tolerances[i]});
    pt.metrics = metrics(pt.confusion);
    pt.lags = lag_stats(pt.confusion);
  });
  return out;
}

}  // namespace emgkey::post
