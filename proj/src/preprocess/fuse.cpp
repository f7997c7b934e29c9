#include "emgkey/preprocess/fuse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace emgkey::preprocess {
namespace {

std::vector<double> magnitude(const SensorStream& acc) {
  std::vector<double> mag(acc.samples());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < acc.channels; ++c) s += acc.at(c, i) * acc.at(c, i);
    mag[i] = std::sqrt(s);
  }
  return mag;
}

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

struct Peak {
  double time;
  double ratio;
};

Peak dominant_peak(const SensorStream& acc, const char* side) {
  if (acc.samples() == 0) throw NoClapError(std::string("no clap: empty ") + side + " stream");
  const auto mag = magnitude(acc);
  const auto it = std::max_element(mag.begin(), mag.end());
  const double med = median(mag);
  const double ratio = med > 0.0 ? *it / med : std::numeric_limits<double>::infinity();
  if (!(ratio >= kClapDominance)) {
    throw NoClapError(std::string("no clap: ") + side + " accelerometer peak is only " +
                      std::to_string(ratio) + "x its median");
  }
  return {acc.timestamps[static_cast<std::size_t>(it - mag.begin())], ratio};
}

}  // namespace

AlignmentResult detect_clap_lag(const SensorStream& left_acc, const SensorStream& right_acc) {
  const auto l = dominant_peak(left_acc, "left");
  const auto r = dominant_peak(right_acc, "right");
  return {r.time - l.time, std::min(l.ratio, r.ratio)};
}

FuseResult fuse(const SensorRecording& rec, const FuseOptions& opts) {
  validate(opts.filter);
  FuseResult result;

  std::vector<SensorStream> streams;
  for (auto side : {Side::left, Side::right}) {
    for (auto m : {Modality::emg, Modality::acc, Modality::gyro}) {
      auto s = rec.stream(m, side);
      if (opts.regularize) s = regularize_timestamps(s);
      if (m == Modality::emg) s = filter_emg(s, opts.filter);
      streams.push_back(std::move(s));
    }
  }

  if (opts.align) {
    try {
      result.alignment = detect_clap_lag(streams[1], streams[4]);
      for (std::size_t i = 3; i < 6; ++i) {
        for (auto& t : streams[i].timestamps) t -= result.alignment->lag;
      }
    } catch (const NoClapError&) {
      result.alignment.reset();
    }
  }

  double start = -std::numeric_limits<double>::infinity();
  double end = std::numeric_limits<double>::infinity();
  for (const auto& s : streams) {
    start = std::max(start, s.timestamps.front());
    end = std::min(end, s.timestamps.back());
  }
  if (!(end > start)) throw DataError("fuse: streams do not overlap in time");

  auto& fused = result.stream;
  fused.meta = rec.meta;
  fused.t0 = start;
  fused.rate = opts.rate;
  fused.length = static_cast<std::size_t>(std::floor((end - start) * opts.rate + 1e-9)) + 1;
  std::vector<double> grid(fused.length);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = std::min(fused.time(i), end);

  fused.values.assign(kFusedChannels * fused.length, 0.0);
  for (const auto& s : streams) {
    const auto base = fused_channel_offset(s.modality, s.side);
    for (std::size_t c = 0; c < s.channels; ++c) {
      const auto ch = interpolate(s.timestamps, s.channel(c), grid);
      std::copy(ch.begin(), ch.end(),
                fused.values.begin() + static_cast<std::ptrdiff_t>((base + c) * fused.length));
    }
  }
  return result;
}

}  // namespace emgkey::preprocess
