#include "emgkey/core/error.hpp"
#include "emgkey/core/random.hpp"
#include "emgkey/post/matching.hpp"
#include "emgkey/post/metrics.hpp"
#include "emgkey/post/peaks.hpp"
#include "emgkey/post/report.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

using namespace emgkey;
using namespace emgkey::post;
using namespace emgkey::oracle;
namespace fs = std::filesystem;

namespace {

// Maximum total height over subsets of local maxima with pairwise gaps >= dist.
double best_subset_height(const std::vector<double>& x, const std::vector<std::size_t>& maxima,
                          std::size_t dist, std::vector<std::size_t>& best) {
  double best_sum = -1.0;
  const auto m = maxima.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::size_t> pick;
    for (std::size_t b = 0; b < m; ++b) {
      if (mask & (std::size_t{1} << b)) pick.push_back(maxima[b]);
    }
    bool ok = true;
    for (std::size_t a = 1; a < pick.size(); ++a) ok = ok && pick[a] - pick[a - 1] >= dist;
    if (!ok) continue;
    double sum = 0.0;
    for (auto p : pick) sum += x[p];
    if (sum > best_sum) {
      best_sum = sum;
      best = pick;
    }
  }
  return best_sum;
}

}  // namespace

TEST_CASE("peak detection handles the basic shapes") {
  const PeakConfig cfg;
  CHECK(distance_samples(cfg) == 5);
  CHECK(detect_peaks(std::vector<double>(40, 0.0), cfg).empty());

  std::vector<double> pulse(30, 0.0);
  std::fill(pulse.begin() + 10, pulse.begin() + 18, 1.0);
  CHECK(detect_peaks(pulse, cfg) == std::vector<std::size_t>{10});

  std::vector<double> edge{1.0, 0.2, 0.1, 0.2, 0.9};
  CHECK(detect_peaks(edge, cfg).empty());

  std::vector<double> low{0.0, 0.45, 0.0};
  CHECK(detect_peaks(low, cfg).empty());

  PeakConfig bad;
  bad.min_prominence = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = {};
  bad.min_distance = 0.001;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("the closer of two peaks yields to the higher one") {
  std::vector<double> x(20, 0.0);
  x[6] = 0.9;
  x[10] = 0.8;
  const auto got = detect_peaks(x, PeakConfig{});
  CHECK(got == std::vector<std::size_t>{6});

  std::vector<std::size_t> best;
  best_subset_height(x, local_maxima(x), 5, best);
  CHECK(best == got);

  std::vector<double> tie(20, 0.0);
  tie[6] = 0.8;
  tie[9] = 0.8;
  CHECK(detect_peaks(tie, PeakConfig{}) == std::vector<std::size_t>{6});
  tie[11] = 0.8;
  CHECK(detect_peaks(tie, PeakConfig{}) == std::vector<std::size_t>{6, 11});
}

TEST_CASE("prominence matches scipy reference values") {
  struct Case {
    std::vector<double> x;
    std::vector<std::size_t> peaks;
    std::vector<double> prominences;
  };
  // Plateau peaks are reported at their first sample; scipy uses the middle.
  const std::vector<Case> cases{
      {{0, 0.2, 0.9, 0.3, 0.6, 0.4, 1.0, 0.1, 0.7, 0.65, 0.8, 0}, {2, 4, 6, 8, 10}, {0.6, 0.2, 1.0, 0.05, 0.7}},
      {{0.1, 0.5, 0.5, 0.5, 0.2, 0.8, 0.3, 0.35, 0.3, 0.9, 0.05}, {1, 5, 7, 9}, {0.3, 0.5, 0.05, 0.8}},
      {{0, 1, 0, 0.6, 0.55, 0.7, 0.2, 0.95, 0.1, 0.3, 0.25, 0}, {1, 3, 5, 7, 9}, {1.0, 0.05, 0.5, 0.95, 0.2}},
  };
  for (const auto& c : cases) {
    REQUIRE(local_maxima(c.x) == c.peaks);
    for (std::size_t i = 0; i < c.peaks.size(); ++i) {
      CHECK(prominence(c.x, c.peaks[i]) == doctest::Approx(c.prominences[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("peak detection equals the brute-force reference on random signals") {
  Rng rng(31);
  std::size_t total_peaks = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(pick(rng, 1, 64));
    std::vector<double> x(n);
    // Coarse levels make plateaus and equal heights common.
    for (auto& v : x) v = 0.05 * pick(rng, 0, 20);
    PeakConfig cfg;
    cfg.min_distance = 0.005 * pick(rng, 1, 8);
    cfg.min_height = 0.05 * pick(rng, 1, 14);
    cfg.min_prominence = 0.05 * pick(rng, 1, 6) - 0.01;
    const auto got = detect_peaks(x, cfg);
    const auto want = reference_peaks(x, cfg.min_height, cfg.min_prominence, distance_samples(cfg));
    REQUIRE(got == want);
    for (std::size_t i = 1; i < got.size(); ++i) CHECK(got[i] - got[i - 1] >= distance_samples(cfg));
    total_peaks += got.size();
  }
  CHECK(total_peaks > 200);
}

TEST_CASE("peaks survive amplitude scaling") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(64);
    for (auto& v : x) v = rng.uniform();
    const PeakConfig cfg;
    const double a = 1.0 + rng.uniform();
    std::vector<double> y(x.size());
    std::transform(x.begin(), x.end(), y.begin(), [a](double v) { return a * v; });
    for (auto p : detect_peaks(x, cfg)) {
      CHECK(y[p] >= cfg.min_height);
      CHECK(prominence(y, p) >= cfg.min_prominence);
    }
  }
}

TEST_CASE("assignment solver finds the minimum over all injections") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rows = static_cast<std::size_t>(pick(rng, 1, 5));
    const auto cols = static_cast<std::size_t>(pick(rng, 1, 5));
    std::vector<double> cost(rows * cols);
    for (auto& c : cost) c = pick(rng, 0, 9);
    const auto got = solve_assignment(cost, rows, cols);
    double got_cost = 0.0;
    std::vector<bool> used(cols, false);
    std::size_t assigned = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (got[r] < 0) continue;
      const auto c = static_cast<std::size_t>(got[r]);
      REQUIRE_FALSE(used[c]);
      used[c] = true;
      ++assigned;
      got_cost += cost[r * cols + c];
    }
    CHECK(assigned == std::min(rows, cols));
    // Brute force over column permutations.
    std::vector<std::size_t> perm(std::max(rows, cols));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        if (perm[r] < cols) s += cost[r * cols + perm[r]];
      }
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got_cost == best);
  }
  CHECK_THROWS_AS(solve_assignment(std::vector<double>(3), 2, 2), ShapeError);
}

TEST_CASE("tolerant confusion reproduces the worked examples") {
  const std::vector<double> t1{0.500}, p1{0.505};
  auto c = tolerant_confusion(t1, p1, 1000, {0.010});
  CHECK(c.tp == 1);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK(c.tn == 999);

  const std::vector<double> t2{0.1, 0.2, 0.3};
  c = tolerant_confusion(t2, {}, 1000, {0.050});
  CHECK(c.tp == 0);
  CHECK(c.fp == 0);
  CHECK(c.fn == 3);
  CHECK(c.tn == 997);

  const std::vector<double> t3{0.050, 0.100}, p3{0.070, 0.080};
  c = tolerant_confusion(t3, p3, 1000, {0.025});
  REQUIRE(c.tp == 2);
  CHECK(c.matches[0].prediction == 0.070);
  CHECK(c.matches[1].prediction == 0.080);
  CHECK(c.total_lag() == doctest::Approx(0.040).epsilon(1e-12));

  // A lag of exactly one sample period counts at a one-sample tolerance.
  c = tolerant_confusion(t1, p1, 1000, {0.005});
  CHECK(c.tp == 1);
  c = tolerant_confusion(t1, p1, 1000, {0.0});
  CHECK(c.tp == 0);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);

  CHECK_THROWS_AS(tolerant_confusion(t1, p1, 1000, {-0.001}), ConfigError);
  CHECK_THROWS_AS(tolerant_confusion(t2, {}, 2, {0.01}), DataError);
}

TEST_CASE("tolerant confusion equals exhaustive enumeration on random instances") {
  Rng rng(2024);
  std::size_t nontrivial = 0;
  for (int trial = 0; trial < 500; ++trial) {
    // Integer milliseconds keep every lag sum exact.
    const auto truth = random_times(rng, 8, 200);
    const auto pred = random_times(rng, 8, 200);
    const double tol = 5.0 * pick(rng, 0, 10);
    const std::size_t grid = 1000;
    const auto got = tolerant_confusion(truth, pred, grid, {tol});
    const auto want = exhaustive_match(truth, pred, tol);
    REQUIRE(got.tp == want.count);
    REQUIRE(got.total_lag() == want.lag);
    CHECK_NOTHROW(check_identities(got, truth.size(), pred.size(), grid));
    CHECK(got.tp <= std::min(truth.size(), pred.size()));
    for (const auto& m : got.matches) CHECK(std::abs(m.lag) <= tol);
    if (got.tp >= 2) ++nontrivial;
  }
  CHECK(nontrivial > 100);
}

TEST_CASE("broken count identities are reported") {
  TolerantConfusion c;
  c.tp = 1;
  c.fn = 2;
  c.tn = 10;
  CHECK_THROWS_AS(check_identities(c, 3, 1, 13), std::logic_error);
  c.matches.push_back({0.0, 0.0, 0.0});
  CHECK_NOTHROW(check_identities(c, 3, 1, 13));
}

TEST_CASE("metrics follow the confusion counts") {
  TolerantConfusion perfect;
  perfect.tp = 10;
  perfect.tn = 990;
  auto m = metrics(perfect);
  CHECK(*m.accuracy == 1.0);
  CHECK(*m.balanced_accuracy == 1.0);
  CHECK(*m.precision == 1.0);
  CHECK(*m.recall == 1.0);
  CHECK(*m.f1 == 1.0);

  TolerantConfusion majority;
  majority.fn = 3;
  majority.tn = 997;
  m = metrics(majority);
  CHECK(*m.recall == 0.0);
  CHECK(*m.balanced_accuracy == 0.5);
  CHECK_FALSE(m.precision.has_value());
  CHECK_FALSE(m.f1.has_value());

  TolerantConfusion mixed;
  mixed.tp = 8;
  mixed.fp = 2;
  mixed.fn = 2;
  mixed.tn = 988;
  m = metrics(mixed);
  CHECK(*m.precision == doctest::Approx(0.8));
  CHECK(*m.recall == doctest::Approx(0.8));
  CHECK(*m.f1 == doctest::Approx(0.8));
  CHECK(*m.specificity == doctest::Approx(988.0 / 990.0));

  TolerantConfusion none;
  m = metrics(none);
  CHECK_FALSE(m.accuracy.has_value());
  CHECK_FALSE(m.balanced_accuracy.has_value());

  TolerantConfusion zero;
  zero.tp = 0;
  zero.fp = 4;
  zero.fn = 4;
  zero.tn = 10;
  CHECK(*metrics(zero).f1 == 0.0);
}

TEST_CASE("top-n accuracy ranks classes with ties toward lower ordinals") {
  Rng rng(99);
  const std::size_t n = 10000;
  std::vector<double> probs(n * 52);
  std::vector<int> truth(n);
  for (auto& p : probs) p = rng.uniform();
  for (auto& t : truth) t = pick(rng, 0, 51);
  const double top3 = topn_accuracy(probs, truth, 3);
  CHECK(std::abs(top3 - 3.0 / 52.0) <= 0.01);
  CHECK(topn_accuracy(probs, truth, 52) == 1.0);
  CHECK(topn_accuracy(probs, truth, 1) < top3);

  std::vector<double> onehot(n * 52, 0.0);
  for (std::size_t i = 0; i < n; ++i) onehot[i * 52 + static_cast<std::size_t>(truth[i])] = 1.0;
  for (int k = 1; k <= 52; ++k) CHECK(topn_accuracy(onehot, truth, k) == 1.0);

  std::vector<double> flat(52, 1.0 / 52.0);
  CHECK(true_class_rank(flat, 0) == 0);
  CHECK(true_class_rank(flat, 51) == 51);
  const std::vector<int> last{51}, first{0};
  CHECK(topn_accuracy(flat, first, 1) == 1.0);
  CHECK(topn_accuracy(flat, last, 51) == 0.0);

  CHECK_THROWS_AS(topn_accuracy(flat, first, 0), ConfigError);
  CHECK_THROWS_AS(topn_accuracy(flat, first, 53), ConfigError);
  CHECK_THROWS_AS(topn_accuracy(std::vector<double>(51), first, 1), ShapeError);
}

TEST_CASE("lag statistics cover matched pairs only") {
  const std::vector<double> truth{1.0, 2.0, 3.0, 9.0}, pred{1.01, 1.99, 3.03};
  const auto c = tolerant_confusion(truth, pred, 2000, {0.05});
  const auto s = lag_stats(c);
  CHECK(s.count == 3);
  CHECK(*s.mean == doctest::Approx((0.01 - 0.01 + 0.03) / 3.0));
  CHECK(*s.sd == doctest::Approx(0.02));
  CHECK_FALSE(lag_stats(TolerantConfusion{}).mean.has_value());
}

TEST_CASE("tolerance sweeps are monotone and independent of the job count") {
  ProbabilityTrack off;
  off.values.assign(200, 0.0);
  off.values[51] = 1.0;
  const std::vector<double> truth_off{off.time(50)};
  const std::vector<double> zero{0.0};
  const auto s0 = tolerance_sweep(off, truth_off, zero, PeakConfig{});
  CHECK(s0[0].confusion.tp == 0);

  Rng rng(8);
  std::vector<double> tolerances;
  for (int k = 0; k <= 10; ++k) tolerances.push_back(0.005 * k);
  for (int trial = 0; trial < 100; ++trial) {
    ProbabilityTrack track;
    track.t0 = rng.uniform(0.0, 5.0);
    track.values.resize(400);
    for (auto& v : track.values) v = rng.uniform() < 0.05 ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.3);
    std::vector<double> truth;
    for (int i = 0; i < 12; ++i) truth.push_back(track.time(static_cast<std::size_t>(pick(rng, 0, 399))));
    std::sort(truth.begin(), truth.end());
    const auto sweep = tolerance_sweep(track, truth, tolerances, PeakConfig{}, 1);
    for (std::size_t i = 1; i < sweep.size(); ++i) {
      CHECK(sweep[i].confusion.tp >= sweep[i - 1].confusion.tp);
      CHECK(*sweep[i].metrics.recall >= *sweep[i - 1].metrics.recall);
    }
    if (trial < 5) {
      const auto par = tolerance_sweep(track, truth, tolerances, PeakConfig{}, 4);
      for (std::size_t i = 0; i < sweep.size(); ++i) {
        CHECK(to_json(par[i]) == to_json(sweep[i]));
      }
    }
  }
}

TEST_CASE("prediction files round-trip") {
  const auto dir = fs::temp_directory_path() / ("emgkey_post_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  ProbabilityTrack track;
  track.t0 = 0.15;
  track.values = {0.1, 0.123456789012345, 1.0 / 3.0, 0.0};
  write_binary_predictions(dir / "b.csv", track);
  const auto back = read_binary_predictions(dir / "b.csv");
  CHECK(back.values == track.values);
  CHECK(back.t0 == track.t0);
  CHECK_THROWS_AS(read_binary_predictions(dir / "b.csv", 100.0), DataError);

  ClassPredictions cp;
  cp.t = {1.0, 2.5};
  cp.p.resize(2 * 52);
  for (std::size_t i = 0; i < cp.p.size(); ++i) cp.p[i] = 1.0 / static_cast<double>(i + 3);
  write_class_predictions(dir / "c.csv", cp);
  const auto cback = read_class_predictions(dir / "c.csv");
  CHECK(cback.t == cp.t);
  CHECK(cback.p == cp.p);
  CHECK(cback.row(1)[0] == cp.p[52]);
  fs::remove_all(dir);
}

TEST_CASE("summaries use the mean (sd) style") {
  const std::vector<std::optional<double>> v{0.70, 0.80, std::nullopt, 0.90};
  const auto m = mean_sd(v);
  CHECK(m.n == 3);
  CHECK(*m.mean == doctest::Approx(0.8));
  CHECK(*m.sd == doctest::Approx(0.1));
  CHECK(format_mean_sd(m) == "80.0 (10.0)");
  CHECK(format_mean_sd(MeanSd{}) == "n/a");
  const std::vector<std::optional<double>> one{0.761};
  CHECK(format_mean_sd(mean_sd(one)) == "76.1");
  const auto j = to_json(metrics(TolerantConfusion{}));
  CHECK(j.at("precision").is_null());
  CHECK_FALSE(optional_number(j.at("recall")).has_value());
}
