#pragma once

#include "emgkey/core/recording.hpp"

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace emgkey::preprocess {

/// (N - 1) / (t_last - t_first). Throws DataError for fewer than two samples
/// or a zero span.
double estimate_rate(const SensorStream& stream);

/// Copy of the stream with timestamps t_first + i / estimate_rate(stream).
SensorStream regularize_timestamps(const SensorStream& stream);

/// Linear interpolation of one channel at sorted query times. Queries outside
/// [times.front(), times.back()] are clamped to the end values.
std::vector<double> interpolate(std::span<const double> times, std::span<const double> values,
                                std::span<const double> queries);

/// Linear resampling onto t_first + k / target for every k with the grid point
/// inside the original span. Throws DataError for an empty stream and
/// ConfigError when target is below the stream rate.
SensorStream resample_to(const SensorStream& stream, double target);

/// Second-order IIR section, a[0] == 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

/// Second-order Butterworth high-pass (bilinear transform with prewarping).
Biquad butterworth2_highpass(double cutoff_hz, double sample_rate);
/// Second-order notch with quality factor q.
Biquad iir_notch(double center_hz, double q, double sample_rate);

/// Causal filtering with the state initialised to the steady state of a
/// constant input equal to x[0], so a constant signal has no start transient.
std::vector<double> apply(const Biquad& f, std::span<const double> x);

std::complex<double> frequency_response(const Biquad& f, double freq_hz, double sample_rate);

struct HighpassSpec {
  double cutoff_hz = 20.0;
};
struct NotchSpec {
  double center_hz = 50.0;
  double q = 25.0;
};

/// EMG filters; both off by default.
struct FilterConfig {
  std::optional<HighpassSpec> highpass;
  std::optional<NotchSpec> notch;
};

/// Throws ConfigError unless cutoff and centre lie in (0, 100) Hz and q > 0.
void validate(const FilterConfig& cfg);

/// Applies the configured filters to every channel of an EMG stream.
SensorStream filter_emg(const SensorStream& emg, const FilterConfig& cfg);

}  // namespace emgkey::preprocess
