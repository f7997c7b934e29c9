#include "emgkey/analysis/typing.hpp"

#include "emgkey/core/error.hpp"

#include <algorithm>
#include <map>

namespace emgkey::analysis {

Cdf empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Cdf cdf;
  const auto n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double frac = static_cast<double>(i + 1) / n;
    if (!cdf.empty() && cdf.back().first == values[i]) {
      cdf.back().second = frac;
    } else {
      cdf.emplace_back(values[i], frac);
    }
  }
  return cdf;
}

std::optional<double> cdf_quantile(const Cdf& cdf, double q) {
  for (const auto& [v, f] : cdf) {
    if (f >= q) return v;
  }
  return std::nullopt;
}

IntervalStats interval_stats(const KeyEventStream& keys) {
  IntervalStats s;
  const auto times = keys.press_times();
  for (std::size_t i = 1; i < times.size(); ++i) s.press_press.push_back(times[i] - times[i - 1]);

  std::map<int, double> down;
  for (const auto& e : keys.events) {
    if (e.kind == KeyKind::press) {
      down[e.key.ordinal()] = e.time;
    } else if (auto it = down.find(e.key.ordinal()); it != down.end()) {
      s.holds.push_back(e.time - it->second);
      down.erase(it);
    }
  }
  s.press_press_cdf = empirical_cdf(s.press_press);
  s.hold_cdf = empirical_cdf(s.holds);
  if (times.size() >= 2 && times.back() > times.front()) {
    s.keys_per_minute = static_cast<double>(times.size() - 1) / (times.back() - times.front()) * 60.0;
  }
  return s;
}

double class_skew(std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw ConfigError("class_skew: empty label list");
  const auto neg = std::count(labels.begin(), labels.end(), std::uint8_t{0});
  return static_cast<double>(neg) / static_cast<double>(labels.size());
}

}  // namespace emgkey::analysis
