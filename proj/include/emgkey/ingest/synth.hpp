#pragma once

#include "emgkey/core/keys.hpp"
#include "emgkey/core/recording.hpp"
#include "emgkey/core/segments.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace emgkey::ingest {

/// Log-normal law parameterised by its median and the sigma of log(x).
struct LogNormalLaw {
  double median = 0.3;
  double sigma = 0.4;
};

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t n_keystrokes = 100;
  /// Probability per key ordinal; empty means uniform over the layout keys.
  std::vector<double> key_distribution;
  /// Keys typed in this order; when nonempty it replaces n_keystrokes and
  /// key_distribution.
  std::vector<PhysKey> key_sequence;
  LogNormalLaw press_press{0.30, 0.40};
  LogNormalLaw hold{0.10, 0.30};
  /// Template RMS over unit-variance white noise, in dB.
  double snr_db = 20.0;
  std::uint64_t template_bank_seed = 1;
  /// Shared component of every bank, i.e. what all synthetic typists have in
  /// common.
  std::uint64_t population_seed = 0x5EEDULL;
  /// Blend weight of the individual component: 0 gives the population bank,
  /// 1 an unrelated bank.
  double individuality = 0.3;
  /// Seconds of keystroke-free signal at both ends.
  double duration_pad = 1.0;
  /// Plant a joint clap on both accelerometers at duration_pad / 2.
  bool clap = true;
  /// Offset of the right armband clock against the left one, in seconds.
  double arm_lag = 0.0;
  RecordingMeta meta{"s0", "r0", "p0", TaskType::synthetic, Layout::de, TypingStyle::unknown};
};

/// Throws ConfigError on a config that violates its invariants.
void validate(const SynthConfig& cfg);

/// Support of every template relative to the press time.
inline constexpr double kTemplateStart = -0.150;
inline constexpr double kTemplateEnd = 0.100;

/// Per-key, per-channel activation templates.
///
/// EMG channels carry zero-mean bursts (Gaussian-enveloped carriers between
/// 40 and 90 Hz); accelerometer and gyroscope channels carry smooth Gaussian
/// bumps. Only the arm that types a key (see typing_arm) is activated. Each
/// key is normalised to unit RMS per modality group over its support.
class TemplateBank {
 public:
  TemplateBank(std::uint64_t bank_seed, std::uint64_t population_seed, double individuality);

  /// Template value at `tau` seconds relative to the press; zero outside
  /// [kTemplateStart, kTemplateEnd].
  [[nodiscard]] double value(PhysKey key, std::size_t fused_channel, double tau) const;

 private:
  struct Component {
    double amp = 0.0;
    double freq = 0.0;  // 0 for smooth bumps
    double phase = 0.0;
    double center = 0.0;
    double width = 0.0;
  };
  struct ChannelTemplate {
    std::vector<Component> parts;
  };
  std::vector<ChannelTemplate> templates_;  // [key * 28 + channel]
};

/// Deterministic synthetic recording (pure function of the config).
///
/// EMG is emitted at 200 Hz and the IMU at 50 Hz per arm on exact grids
/// ending at the same time. Every press-press interval is at least 25 ms.
SensorRecording synthesize(const SynthConfig& cfg);

}  // namespace emgkey::ingest
