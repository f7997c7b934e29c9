#include "emgkey/preprocess/signal.hpp"

#include "emgkey/core/error.hpp"

#include <cmath>
#include <numbers>

namespace emgkey::preprocess {

double estimate_rate(const SensorStream& stream) {
  const auto n = stream.timestamps.size();
  if (n < 2) throw DataError("estimate_rate: need at least two samples");
  const double span = stream.timestamps.back() - stream.timestamps.front();
  if (!(span > 0.0)) throw DataError("estimate_rate: zero time span");
  return static_cast<double>(n - 1) / span;
}

SensorStream regularize_timestamps(const SensorStream& stream) {
  const double rate = estimate_rate(stream);
  SensorStream out = stream;
  const double t0 = stream.timestamps.front();
  for (std::size_t i = 0; i < out.timestamps.size(); ++i) {
    out.timestamps[i] = t0 + static_cast<double>(i) / rate;
  }
  out.timestamps.back() = stream.timestamps.back();
  return out;
}

std::vector<double> interpolate(std::span<const double> times, std::span<const double> values,
                                std::span<const double> queries) {
  std::vector<double> out(queries.size());
  if (times.empty()) return out;
  std::size_t j = 0;
  const std::size_t n = times.size();
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const double t = queries[q];
    if (t <= times.front()) {
      out[q] = values.front();
      continue;
    }
    if (t >= times.back()) {
      out[q] = values.back();
      continue;
    }
    if (j > 0 && times[j] > t) j = 0;
    while (j + 1 < n && times[j + 1] <= t) ++j;
    if (times[j] == t) {
      out[q] = values[j];
      continue;
    }
    const double w = (t - times[j]) / (times[j + 1] - times[j]);
    out[q] = values[j] + w * (values[j + 1] - values[j]);
  }
  return out;
}

SensorStream resample_to(const SensorStream& stream, double target) {
  if (stream.timestamps.empty()) throw DataError("resample_to: empty stream");
  if (!(target > 0.0)) throw ConfigError("resample_to: target rate must be positive");
  if (stream.timestamps.size() >= 2 && target < estimate_rate(stream) * (1.0 - 1e-9)) {
    throw ConfigError("resample_to: target rate below the stream rate");
  }
  const double t0 = stream.timestamps.front();
  const double t1 = stream.timestamps.back();
  const auto k_max = static_cast<std::size_t>(std::floor((t1 - t0) * target + 1e-9));
  std::vector<double> grid(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) {
    grid[k] = std::min(t0 + static_cast<double>(k) / target, t1);
  }
  if (std::abs(grid.back() - t1) < 1e-9) grid.back() = t1;

  SensorStream out;
  out.modality = stream.modality;
  out.side = stream.side;
  out.channels = stream.channels;
  out.timestamps = grid;
  out.values.reserve(grid.size() * stream.channels);
  for (std::size_t c = 0; c < stream.channels; ++c) {
    const auto ch = interpolate(stream.timestamps, stream.channel(c), grid);
    out.values.insert(out.values.end(), ch.begin(), ch.end());
  }
  return out;
}

Biquad butterworth2_highpass(double cutoff_hz, double sample_rate) {
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
  Biquad f;
  f.b = {norm, -2.0 * norm, norm};
  f.a = {1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - std::numbers::sqrt2 * k + k * k) * norm};
  return f;
}

Biquad iir_notch(double center_hz, double q, double sample_rate) {
  const double w0 = 2.0 * std::numbers::pi * center_hz / sample_rate;
  const double bw = w0 / q;
  const double gain = 1.0 / (1.0 + std::tan(bw / 2.0));
  Biquad f;
  f.b = {gain, -2.0 * gain * std::cos(w0), gain};
  f.a = {1.0, -2.0 * gain * std::cos(w0), 2.0 * gain - 1.0};
  return f;
}

std::vector<double> apply(const Biquad& f, std::span<const double> x) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  const auto& [b0, b1, b2] = f.b;
  const double a1 = f.a[1];
  const double a2 = f.a[2];
  const double dc = (b0 + b1 + b2) / (1.0 + a1 + a2);
  const double y0 = dc * x[0];
  double z2 = b2 * x[0] - a2 * y0;
  double z1 = b1 * x[0] - a1 * y0 + z2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double out = b0 * x[i] + z1;
    z1 = b1 * x[i] - a1 * out + z2;
    z2 = b2 * x[i] - a2 * out;
    y[i] = out;
  }
  return y;
}

std::complex<double> frequency_response(const Biquad& f, double freq_hz, double sample_rate) {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  return (f.b[0] + f.b[1] * z1 + f.b[2] * z2) / (f.a[0] + f.a[1] * z1 + f.a[2] * z2);
}

void validate(const FilterConfig& cfg) {
  if (cfg.highpass && !(cfg.highpass->cutoff_hz > 0.0 && cfg.highpass->cutoff_hz < 100.0)) {
    throw ConfigError("high-pass cutoff must lie in (0, 100) Hz");
  }
  if (cfg.notch) {
    if (!(cfg.notch->center_hz > 0.0 && cfg.notch->center_hz < 100.0)) {
      throw ConfigError("notch centre must lie in (0, 100) Hz");
    }
    if (!(cfg.notch->q > 0.0)) throw ConfigError("notch Q must be positive");
  }
}

SensorStream filter_emg(const SensorStream& emg, const FilterConfig& cfg) {
  validate(cfg);
  if (!cfg.highpass && !cfg.notch) return emg;
  const double rate = estimate_rate(emg);
  SensorStream out = emg;
  const auto n = emg.samples();
  for (std::size_t c = 0; c < emg.channels; ++c) {
    std::vector<double> ch(emg.channel(c).begin(), emg.channel(c).end());
    if (cfg.highpass) ch = apply(butterworth2_highpass(cfg.highpass->cutoff_hz, rate), ch);
    if (cfg.notch) ch = apply(iir_notch(cfg.notch->center_hz, cfg.notch->q, rate), ch);
    std::copy(ch.begin(), ch.end(), out.values.begin() + static_cast<std::ptrdiff_t>(c * n));
  }
  return out;
}

}  // namespace emgkey::preprocess
