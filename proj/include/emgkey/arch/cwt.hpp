#pragma once

#include "emgkey/nn/ops.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace emgkey::arch {

struct CwtConfig {
  /// Morlet centre frequency.
  double w0 = 6.0;
  double dj = 0.125;
  double dt = 0.005;
  std::size_t scale_count = 38;
};

/// Throws ConfigError for non-positive parameters.
void validate(const CwtConfig& cfg);

/// Smallest scale, 2 * dt.
double smallest_scale(const CwtConfig& cfg);

/// s_j = s0 * 2^(j * dj), j = 0 .. scale_count - 1.
std::vector<double> cwt_scales(const CwtConfig& cfg);

/// floor(log2(n * dt / s0) / dj) + 1; 38 for a 50-sample window at 200 Hz.
std::size_t dyadic_scale_count(std::size_t n, const CwtConfig& cfg);

/// Fourier period equivalent to a Morlet scale: 4 pi s / (w0 + sqrt(2 + w0^2)).
double fourier_period(double scale, double w0);

/// Wavelet power |W|^2 of one channel, scale-major [scale_count][x.size()].
/// Frequency-domain convolution with the Morlet daughter wavelets, zero
/// padded to the next power of two at least twice the signal length.
std::vector<double> cwt_power(std::span<const double> x, const CwtConfig& cfg);

/// The same transform as a fixed complex matrix for a given signal length,
/// for use as a differentiable graph operation.
template <class T>
nn::SpectralOperator<T> cwt_operator(std::size_t length, const CwtConfig& cfg);

}  // namespace emgkey::arch
