#include "emgkey/arch/cwt.hpp"

#include "emgkey/core/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace emgkey::arch {
namespace {

std::mutex g_plan_mutex;

std::size_t padded_length(std::size_t n) {
  std::size_t p = 1;
  while (p < 2 * n) p <<= 1;
  return p;
}

/// Complex transform of one real signal: out[j][t] for each scale.
class MorletBank {
 public:
  MorletBank(std::size_t n, const CwtConfig& cfg) : n_(n), pad_(padded_length(n)) {
    validate(cfg);
    if (n == 0) throw ConfigError("cwt: empty signal");
    scales_ = cwt_scales(cfg);
    const double norm0 = std::pow(std::numbers::pi, -0.25);
    daughters_.assign(scales_.size() * pad_, 0.0);
    for (std::size_t j = 0; j < scales_.size(); ++j) {
      const double s = scales_[j];
      const double amp = norm0 * std::sqrt(2.0 * std::numbers::pi * s / cfg.dt);
      for (std::size_t k = 0; k < pad_; ++k) {
        const double kk = k <= pad_ / 2 ? static_cast<double>(k)
                                         : -static_cast<double>(pad_ - k);
        const double w = 2.0 * std::numbers::pi * kk / (static_cast<double>(pad_) * cfg.dt);
        if (w > 0.0) {
          const double e = s * w - cfg.w0;
          daughters_[j * pad_ + k] = amp * std::exp(-0.5 * e * e);
        }
      }
    }
    buf_ = fftw_alloc_complex(pad_);
    spec_ = fftw_alloc_complex(pad_);
    std::lock_guard lock(g_plan_mutex);
    fwd_ = fftw_plan_dft_1d(static_cast<int>(pad_), buf_, spec_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_1d(static_cast<int>(pad_), spec_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  ~MorletBank() {
    {
      std::lock_guard lock(g_plan_mutex);
      fftw_destroy_plan(fwd_);
      fftw_destroy_plan(inv_);
    }
    fftw_free(buf_);
    fftw_free(spec_);
  }

  MorletBank(const MorletBank&) = delete;
  MorletBank& operator=(const MorletBank&) = delete;

  [[nodiscard]] std::size_t scales() const { return scales_.size(); }

  /// Fills out[j * n + t] with the complex coefficient at scale j, sample t.
  void transform(std::span<const double> x, std::vector<std::complex<double>>& out) {
    for (std::size_t i = 0; i < pad_; ++i) {
      buf_[i][0] = i < n_ ? x[i] : 0.0;
      buf_[i][1] = 0.0;
    }
    fftw_execute(fwd_);
    std::vector<std::complex<double>> xhat(pad_);
    // Normalised forward transform (1/N), inverse without scaling.
    for (std::size_t k = 0; k < pad_; ++k) {
      xhat[k] = {spec_[k][0] / static_cast<double>(pad_), spec_[k][1] / static_cast<double>(pad_)};
    }
    out.assign(scales_.size() * n_, {});
    for (std::size_t j = 0; j < scales_.size(); ++j) {
      for (std::size_t k = 0; k < pad_; ++k) {
        const auto v = xhat[k] * daughters_[j * pad_ + k];
        spec_[k][0] = v.real();
        spec_[k][1] = v.imag();
      }
      fftw_execute(inv_);
      for (std::size_t t = 0; t < n_; ++t) out[j * n_ + t] = {buf_[t][0], buf_[t][1]};
    }
  }

 private:
  std::size_t n_;
  std::size_t pad_;
  std::vector<double> scales_;
  std::vector<double> daughters_;
  fftw_complex* buf_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace

void validate(const CwtConfig& cfg) {
  if (!(cfg.w0 > 0.0) || !(cfg.dj > 0.0) || !(cfg.dt > 0.0) || cfg.scale_count == 0) {
    throw ConfigError("cwt: w0, dj, dt and scale_count must be positive");
  }
}

double smallest_scale(const CwtConfig& cfg) { return 2.0 * cfg.dt; }

std::vector<double> cwt_scales(const CwtConfig& cfg) {
  std::vector<double> s(cfg.scale_count);
  for (std::size_t j = 0; j < s.size(); ++j) {
    s[j] = smallest_scale(cfg) * std::exp2(static_cast<double>(j) * cfg.dj);
  }
  return s;
}

std::size_t dyadic_scale_count(std::size_t n, const CwtConfig& cfg) {
  const double ratio = static_cast<double>(n) * cfg.dt / smallest_scale(cfg);
  return static_cast<std::size_t>(std::floor(std::log2(ratio) / cfg.dj + 1e-9)) + 1;
}

double fourier_period(double scale, double w0) {
  return 4.0 * std::numbers::pi * scale / (w0 + std::sqrt(2.0 + w0 * w0));
}

std::vector<double> cwt_power(std::span<const double> x, const CwtConfig& cfg) {
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("cwt: non-finite input");
  }
  MorletBank bank(x.size(), cfg);
  std::vector<std::complex<double>> w;
  bank.transform(x, w);
  std::vector<double> p(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = std::norm(w[i]);
  return p;
}

template <class T>
nn::SpectralOperator<T> cwt_operator(std::size_t length, const CwtConfig& cfg) {
  MorletBank bank(length, cfg);
  nn::SpectralOperator<T> op;
  op.scales = bank.scales();
  op.length = length;
  const auto rows = op.scales * length;
  op.real.assign(rows * length, T(0));
  op.imag.assign(rows * length, T(0));
  std::vector<double> impulse(length, 0.0);
  std::vector<std::complex<double>> w;
  for (std::size_t k = 0; k < length; ++k) {
    impulse[k] = 1.0;
    bank.transform(impulse, w);
    impulse[k] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      op.real[r * length + k] = static_cast<T>(w[r].real());
      op.imag[r * length + k] = static_cast<T>(w[r].imag());
    }
  }
  return op;
}

template nn::SpectralOperator<float> cwt_operator<float>(std::size_t, const CwtConfig&);
template nn::SpectralOperator<double> cwt_operator<double>(std::size_t, const CwtConfig&);

}  // namespace emgkey::arch
