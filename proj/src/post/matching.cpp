#include "emgkey/post/matching.hpp"

#include "emgkey/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace emgkey::post {

namespace {

// Slack for lags that are whole sample periods but pick up rounding error.
constexpr double kToleranceSlack = 1e-9;

// Shortest augmenting path with potentials; requires rows <= cols.
std::vector<long> hungarian(std::span<const double> cost, std::size_t rows, std::size_t cols) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> p(cols + 1, 0), way(cols + 1, 0);
  for (std::size_t i = 1; i <= rows; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[j0] = true;
      const auto i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const auto j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<long> out(rows, -1);
  for (std::size_t j = 1; j <= cols; ++j) {
    if (p[j] != 0) out[p[j] - 1] = static_cast<long>(j - 1);
  }
  return out;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<long> solve_assignment(std::span<const double> cost, std::size_t rows, std::size_t cols) {
  if (cost.size() != rows * cols) throw ShapeError("assignment: cost matrix size mismatch");
  for (double c : cost) {
    if (!std::isfinite(c)) throw DataError("assignment: costs must be finite");
  }
  if (rows == 0 || cols == 0) return std::vector<long>(rows, -1);
  if (rows <= cols) return hungarian(cost, rows, cols);
  std::vector<double> t(cost.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = cost[r * cols + c];
  }
  const auto by_col = hungarian(t, cols, rows);
  std::vector<long> out(rows, -1);
  for (std::size_t c = 0; c < cols; ++c) out[static_cast<std::size_t>(by_col[c])] = static_cast<long>(c);
  return out;
}

void validate(const MatchConfig& cfg) {
  if (!(cfg.tolerance >= 0.0) || !std::isfinite(cfg.tolerance)) {
    throw ConfigError("match config: tolerance must be a finite value >= 0");
  }
}

double TolerantConfusion::total_lag() const {
  double s = 0.0;
  for (const auto& m : matches) s += std::abs(m.lag);
  return s;
}

void check_identities(const TolerantConfusion& c, std::size_t n_truth, std::size_t n_pred,
                      std::size_t grid_samples) {
  const bool ok = c.tp == c.matches.size() && c.tp <= std::min(n_truth, n_pred) &&
                  c.fp == n_pred - c.tp && c.fn == n_truth - c.tp &&
                  grid_samples >= n_pred + c.fn && c.tn == grid_samples - n_pred - c.fn;
  if (!ok) {
    throw std::logic_error("tolerant confusion violates its count identities (tp=" + std::to_string(c.tp) +
                           " fp=" + std::to_string(c.fp) + " fn=" + std::to_string(c.fn) +
                           " tn=" + std::to_string(c.tn) + ")");
  }
}

TolerantConfusion tolerant_confusion(std::span<const double> truth, std::span<const double> predicted,
                                     std::size_t grid_samples, const MatchConfig& cfg) {
  validate(cfg);
  for (double t : truth) {
    if (!std::isfinite(t)) throw DataError("tolerant_confusion: non-finite truth time");
  }
  for (double t : predicted) {
    if (!std::isfinite(t)) throw DataError("tolerant_confusion: non-finite prediction time");
  }
  std::vector<double> tr(truth.begin(), truth.end()), pr(predicted.begin(), predicted.end());
  std::sort(tr.begin(), tr.end());
  std::sort(pr.begin(), pr.end());
  const double reach = cfg.tolerance + kToleranceSlack;
  const auto nt = tr.size();
  const auto np = pr.size();

  // Connected components of the feasibility graph; nodes are truths then predictions.
  DisjointSets sets(nt + np);
  std::size_t lo = 0;
  for (std::size_t i = 0; i < nt; ++i) {
    while (lo < np && pr[lo] < tr[i] - reach) ++lo;
    for (auto j = lo; j < np && pr[j] <= tr[i] + reach; ++j) sets.join(i, nt + j);
  }
  std::vector<std::vector<std::size_t>> comp_truth(nt + np), comp_pred(nt + np);
  for (std::size_t i = 0; i < nt; ++i) comp_truth[sets.find(i)].push_back(i);
  for (std::size_t j = 0; j < np; ++j) comp_pred[sets.find(nt + j)].push_back(j);

  TolerantConfusion out;
  for (std::size_t c = 0; c < nt + np; ++c) {
    const auto& rows = comp_truth[c];
    const auto& cols = comp_pred[c];
    if (rows.empty() || cols.empty()) continue;
    std::vector<double> cost(rows.size() * cols.size());
    double feasible_sum = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const double lag = std::abs(pr[cols[k]] - tr[rows[r]]);
        if (lag <= reach) feasible_sum += lag;
      }
    }
    // Forbidden cost exceeds any achievable total of feasible lags.
    const double forbidden = 1.0 + 2.0 * feasible_sum;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const double lag = std::abs(pr[cols[k]] - tr[rows[r]]);
        cost[r * cols.size() + k] = lag <= reach ? lag : forbidden;
      }
    }
    const auto assign = solve_assignment(cost, rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (assign[r] < 0) continue;
      const double t = tr[rows[r]];
      const double p = pr[cols[static_cast<std::size_t>(assign[r])]];
      // Pairs carrying the forbidden cost are dropped here.
      if (std::abs(p - t) <= reach) out.matches.push_back({t, p, p - t});
    }
  }
  std::sort(out.matches.begin(), out.matches.end(),
            [](const Match& a, const Match& b) {
              return a.truth < b.truth || (a.truth == b.truth && a.prediction < b.prediction);
            });

  out.tp = out.matches.size();
  out.fp = np - out.tp;
  out.fn = nt - out.tp;
  if (grid_samples < np + out.fn) {
    throw DataError("tolerant_confusion: grid of " + std::to_string(grid_samples) +
                    " samples cannot hold " + std::to_string(np) + " predictions and " +
                    std::to_string(out.fn) + " misses");
  }
  out.tn = grid_samples - np - out.fn;
  check_identities(out, nt, np, grid_samples);
  return out;
}

}  // namespace emgkey::post
