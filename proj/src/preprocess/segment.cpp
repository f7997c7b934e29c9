#include "emgkey/preprocess/segment.hpp"

#include "emgkey/core/error.hpp"
#include "emgkey/core/random.hpp"

#include <algorithm>
#include <cmath>

namespace emgkey::preprocess {

WindowGeometry geometry(const SegmentationConfig& cfg) {
  if (!(cfg.before > 0.0) || !(cfg.after > 0.0) || !(cfg.rate > 0.0)) {
    throw ConfigError("segmentation: before, after and rate must be positive");
  }
  if (cfg.stride == 0) throw ConfigError("segmentation: stride must be at least 1");
  const double len = (cfg.before + cfg.after) * cfg.rate;
  const double pre = cfg.before * cfg.rate;
  if (std::abs(len - std::round(len)) > 1e-9 || std::abs(pre - std::round(pre)) > 1e-9) {
    throw ConfigError("segmentation: window edges must fall on whole samples");
  }
  return {static_cast<std::size_t>(std::llround(len)), static_cast<std::size_t>(std::llround(pre))};
}

SegmentationResult segment(std::shared_ptr<const FusedStream> stream, const KeyEventStream& keys,
                           const SegmentationConfig& cfg, SegmentMode mode) {
  const auto geo = geometry(cfg);
  if (std::abs(stream->rate - cfg.rate) > 1e-9) {
    throw ConfigError("segmentation: rate differs from the fused stream rate");
  }
  const auto n = static_cast<std::int64_t>(stream->length);
  const auto pre = static_cast<std::int64_t>(geo.press_index);
  const auto post = static_cast<std::int64_t>(geo.length) - pre;
  const auto fits = [&](std::int64_t c) { return c - pre >= 0 && c + post <= n; };

  SegmentationResult result;
  std::vector<SegmentRef> refs;
  std::vector<std::uint8_t> binary;
  std::vector<int> key_labels;

  struct Press {
    std::int64_t index;
    int key;
  };
  std::vector<Press> presses;
  for (const auto& e : keys.events) {
    if (e.kind != KeyKind::press) continue;
    presses.push_back({stream->nearest_index(e.time), e.key.ordinal()});
  }

  auto ref_at = [&](std::int64_t c) {
    return SegmentRef{0, c - pre, stream->time(static_cast<std::size_t>(c))};
  };

  if (mode == SegmentMode::sliding) {
    for (std::int64_t c = pre; c + post <= n; c += static_cast<std::int64_t>(cfg.stride)) {
      refs.push_back(ref_at(c));
    }
  } else {
    std::vector<std::pair<std::int64_t, int>> positives;
    for (const auto& p : presses) {
      if (!fits(p.index)) {
        ++result.skipped;
        continue;
      }
      positives.emplace_back(p.index, p.key);
    }
    if (mode == SegmentMode::multiclass) {
      for (const auto& [c, key] : positives) {
        refs.push_back(ref_at(c));
        key_labels.push_back(key);
      }
    } else {
      std::vector<std::uint8_t> near(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)), 0);
      for (const auto& p : presses) {
        for (std::int64_t d = -1; d <= 1; ++d) {
          const auto c = p.index + d;
          if (c >= 0 && c < n) near[static_cast<std::size_t>(c)] = 1;
        }
      }
      std::vector<std::pair<std::int64_t, std::uint8_t>> all;
      for (const auto& [c, key] : positives) all.emplace_back(c, 1);
      for (std::int64_t c = pre; c + post <= n; c += static_cast<std::int64_t>(cfg.stride)) {
        if (!near[static_cast<std::size_t>(c)]) all.emplace_back(c, 0);
      }
      std::stable_sort(all.begin(), all.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [c, label] : all) {
        refs.push_back(ref_at(c));
        binary.push_back(label);
      }
    }
  }

  result.batch = SegmentBatch({std::move(stream)}, std::move(refs), geo.length, geo.press_index);
  if (mode == SegmentMode::binary) result.batch.set_binary_labels(std::move(binary));
  if (mode == SegmentMode::multiclass) result.batch.set_key_labels(std::move(key_labels));
  return result;
}

std::vector<std::uint8_t> binary_label_stream(const FusedStream& stream,
                                              const KeyEventStream& keys) {
  std::vector<std::uint8_t> labels(stream.length, 0);
  for (const auto& e : keys.events) {
    if (e.kind != KeyKind::press) continue;
    const auto i = stream.nearest_index(e.time);
    if (i >= 0 && static_cast<std::size_t>(i) < stream.length) {
      labels[static_cast<std::size_t>(i)] = 1;
    }
  }
  return labels;
}

std::vector<double> class_weights(std::span<const int> labels, int n_classes) {
  if (labels.empty()) throw ConfigError("class_weights: empty label list");
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (int l : labels) {
    if (l < 0 || l >= n_classes) throw ConfigError("class_weights: label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  const auto present = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  std::vector<double> w(counts.size(), 0.0);
  const double total = static_cast<double>(labels.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0) {
      w[k] = total / (static_cast<double>(present) * static_cast<double>(counts[k]));
    }
  }
  return w;
}

std::vector<std::size_t> subsample_majority(std::span<const std::uint8_t> labels,
                                            std::uint64_t seed, std::uint64_t call_index) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.empty()) throw ConfigError("subsample_majority: no positive samples");
  Rng rng = Rng::derive(seed, 0x5AB5A3D1E0000000ULL + call_index);
  const std::size_t take = std::min(pos.size(), neg.size());
  // Partial Fisher-Yates: the first `take` slots become a uniform subset.
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + rng.index(neg.size() - i);
    std::swap(neg[i], neg[j]);
  }
  std::vector<std::size_t> out = pos;
  out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace emgkey::preprocess
