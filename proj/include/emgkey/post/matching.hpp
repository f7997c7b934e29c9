#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace emgkey::post {

/// Minimum-cost assignment on a rows x cols cost matrix (row-major). Every
/// row is assigned when rows <= cols, every column otherwise. Returns, per
/// row, the assigned column or -1.
std::vector<long> solve_assignment(std::span<const double> cost, std::size_t rows, std::size_t cols);

struct MatchConfig {
  double tolerance = 0.050;  ///< seconds
};

void validate(const MatchConfig& cfg);

struct Match {
  double truth = 0.0;
  double prediction = 0.0;
  double lag = 0.0;  ///< prediction - truth
};

struct TolerantConfusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::vector<Match> matches;  ///< ordered by truth time

  /// Sum of |lag| over matches, accumulated in match order.
  [[nodiscard]] double total_lag() const;
};

/// Throws std::logic_error if the confusion counts violate
/// tp = |matches|, fp = predicted - tp, fn = actual - tp, tn = (grid - predicted) - fn.
void check_identities(const TolerantConfusion& c, std::size_t n_truth, std::size_t n_pred,
                      std::size_t grid_samples);

/// Matches truths to predictions with the largest possible number of pairs
/// within tolerance and, among those, the smallest total |lag|. Pairs beyond
/// the tolerance carry a prohibitive finite cost and are discarded after
/// solving. tn counts the grid samples that are neither predicted nor missed.
TolerantConfusion tolerant_confusion(std::span<const double> truth, std::span<const double> predicted,
                                     std::size_t grid_samples, const MatchConfig& cfg);

}  // namespace emgkey::post
