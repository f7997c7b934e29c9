#include "emgkey/ingest/synth.hpp"

#include "emgkey/core/error.hpp"
#include "emgkey/core/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace emgkey::ingest {
namespace {

constexpr double kTaperRamp = 0.020;
constexpr double kClapWidth = 0.010;
constexpr double kClapAmplitude = 40.0;
constexpr double kMinInterval = 0.025;

double taper(double tau) {
  if (tau < kTemplateStart || tau > kTemplateEnd) return 0.0;
  const double edge = std::min(tau - kTemplateStart, kTemplateEnd - tau);
  if (edge >= kTaperRamp) return 1.0;
  const double s = std::sin(0.5 * std::numbers::pi * edge / kTaperRamp);
  return s * s;
}

bool is_emg_channel(std::size_t c) { return c % 14 < 8; }
ArmSide channel_arm(std::size_t c) { return c < 14 ? ArmSide::left : ArmSide::right; }

double sample_lognormal(Rng& rng, const LogNormalLaw& law) {
  return law.median * std::exp(law.sigma * rng.normal());
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (!std::isfinite(cfg.snr_db)) throw ConfigError("synth: snr_db must be finite");
  if (!(cfg.press_press.median > 0.0) || !(cfg.press_press.sigma >= 0.0) ||
      !(cfg.hold.median > 0.0) || !(cfg.hold.sigma >= 0.0)) {
    throw ConfigError("synth: log-normal laws need median > 0 and sigma >= 0");
  }
  if (!(cfg.duration_pad > 0.0)) throw ConfigError("synth: duration_pad must be positive");
  if (!(cfg.individuality >= 0.0 && cfg.individuality <= 1.0)) {
    throw ConfigError("synth: individuality must lie in [0, 1]");
  }
  if (!std::isfinite(cfg.arm_lag) || std::abs(cfg.arm_lag) >= cfg.duration_pad / 2) {
    throw ConfigError("synth: |arm_lag| must be below duration_pad / 2");
  }
  if (!cfg.key_distribution.empty()) {
    if (cfg.key_distribution.size() != kKeyCount) {
      throw ConfigError("synth: key_distribution needs 52 entries");
    }
    double sum = 0.0;
    for (int k = 0; k < kKeyCount; ++k) {
      const double p = cfg.key_distribution[k];
      if (!(p >= 0.0)) throw ConfigError("synth: negative key probability");
      if (p > 0.0 && !key_in_layout(PhysKey::from_ordinal(k), cfg.meta.layout)) {
        throw ConfigError("synth: key " + std::string(PhysKey::from_ordinal(k).name()) +
                          " has probability but is not part of the layout");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("synth: key probabilities must sum to 1");
  }
  for (auto k : cfg.key_sequence) {
    if (!key_in_layout(k, cfg.meta.layout)) {
      throw ConfigError("synth: key " + std::string(k.name()) + " in key_sequence is not part of the layout");
    }
  }
}

TemplateBank::TemplateBank(std::uint64_t bank_seed, std::uint64_t population_seed,
                           double individuality)
    : templates_(static_cast<std::size_t>(kKeyCount) * kFusedChannels) {
  auto draw = [](Rng& rng, bool emg) {
    std::vector<Component> parts;
    if (emg) {
      const int n = 1 + static_cast<int>(rng.index(2));
      const double gain = std::exp(0.8 * rng.normal());
      for (int i = 0; i < n; ++i) {
        parts.push_back({gain * rng.uniform(0.5, 1.0), rng.uniform(40.0, 90.0),
                         rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(-0.09, -0.01),
                         rng.uniform(0.015, 0.035)});
      }
    } else {
      parts.push_back({rng.normal(), 0.0, 0.0, rng.uniform(-0.08, 0.02),
                       rng.uniform(0.02, 0.04)});
    }
    return parts;
  };

  for (int k = 0; k < kKeyCount; ++k) {
    const auto key = PhysKey::from_ordinal(k);
    Rng pop = Rng::derive(population_seed, static_cast<std::uint64_t>(k));
    Rng ind = Rng::derive(bank_seed, 1000 + static_cast<std::uint64_t>(k));
    for (std::size_t c = 0; c < kFusedChannels; ++c) {
      const bool emg = is_emg_channel(c);
      auto a = draw(pop, emg);
      auto b = draw(ind, emg);
      if (channel_arm(c) != typing_arm(key)) continue;
      auto& parts = templates_[k * kFusedChannels + c].parts;
      for (auto p : a) {
        p.amp *= 1.0 - individuality;
        if (p.amp != 0.0) parts.push_back(p);
      }
      for (auto p : b) {
        p.amp *= individuality;
        if (p.amp != 0.0) parts.push_back(p);
      }
    }
    // Unit RMS per modality group on the active arm over the support.
    for (bool emg_group : {true, false}) {
      double energy = 0.0;
      std::size_t count = 0;
      for (std::size_t c = 0; c < kFusedChannels; ++c) {
        if (is_emg_channel(c) != emg_group || channel_arm(c) != typing_arm(key)) continue;
        for (double tau = kTemplateStart; tau <= kTemplateEnd; tau += 0.001) {
          const double v = value(key, c, tau);
          energy += v * v;
          ++count;
        }
      }
      const double rms = count ? std::sqrt(energy / static_cast<double>(count)) : 0.0;
      if (rms <= 0.0) continue;
      for (std::size_t c = 0; c < kFusedChannels; ++c) {
        if (is_emg_channel(c) != emg_group) continue;
        for (auto& p : templates_[k * kFusedChannels + c].parts) p.amp /= rms;
      }
    }
  }
}

double TemplateBank::value(PhysKey key, std::size_t fused_channel, double tau) const {
  const double w = taper(tau);
  if (w == 0.0) return 0.0;
  double v = 0.0;
  for (const auto& p : templates_[key.ordinal() * kFusedChannels + fused_channel].parts) {
    const double z = (tau - p.center) / p.width;
    const double env = std::exp(-0.5 * z * z);
    const double carrier =
        p.freq > 0.0 ? std::cos(2.0 * std::numbers::pi * p.freq * tau + p.phase) : 1.0;
    v += p.amp * env * carrier;
  }
  return w * v;
}

SensorRecording synthesize(const SynthConfig& cfg) {
  validate(cfg);
  SensorRecording rec;
  rec.meta = cfg.meta;

  std::vector<PhysKey> candidates;
  std::vector<double> cumulative;
  {
    std::vector<double> probs(kKeyCount, 0.0);
    if (cfg.key_distribution.empty()) {
      const auto keys = layout_keys(cfg.meta.layout);
      for (auto k : keys) probs[k.ordinal()] = 1.0 / static_cast<double>(keys.size());
    } else {
      probs = cfg.key_distribution;
    }
    double acc = 0.0;
    for (int k = 0; k < kKeyCount; ++k) {
      if (probs[k] <= 0.0) continue;
      acc += probs[k];
      candidates.push_back(PhysKey::from_ordinal(k));
      cumulative.push_back(acc);
    }
  }

  const auto n_keys = cfg.key_sequence.empty() ? cfg.n_keystrokes : cfg.key_sequence.size();
  Rng key_rng = Rng::derive(cfg.seed, 1);
  Rng interval_rng = Rng::derive(cfg.seed, 2);
  Rng hold_rng = Rng::derive(cfg.seed, 3);

  std::vector<double> press(n_keys);
  std::vector<PhysKey> keys(n_keys, PhysKey::from_ordinal(0));
  double t = cfg.duration_pad;
  for (std::size_t i = 0; i < n_keys; ++i) {
    press[i] = t;
    if (cfg.key_sequence.empty()) {
      const double u = key_rng.uniform() * cumulative.back();
      const auto pos = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
      keys[i] = candidates[std::min<std::size_t>(pos, candidates.size() - 1)];
    } else {
      keys[i] = cfg.key_sequence[i];
    }
    double interval = 0.0;
    do {
      interval = sample_lognormal(interval_rng, cfg.press_press);
    } while (interval < kMinInterval);
    t += interval;
  }

  std::vector<double> release(n_keys);
  for (std::size_t i = 0; i < n_keys; ++i) {
    double hold = sample_lognormal(hold_rng, cfg.hold);
    for (std::size_t j = i + 1; j < n_keys; ++j) {
      if (keys[j] == keys[i]) {
        hold = std::min(hold, 0.9 * (press[j] - press[i]));
        break;
      }
    }
    release[i] = press[i] + hold;
  }

  double end = cfg.duration_pad;
  for (double r : release) end = std::max(end, r);
  end += cfg.duration_pad;
  const auto imu_intervals = static_cast<std::size_t>(std::ceil(end * 50.0 - 1e-9));

  struct Ev {
    double t;
    std::size_t order;
    KeyEvent e;
  };
  std::vector<Ev> evs;
  for (std::size_t i = 0; i < n_keys; ++i) {
    evs.push_back({press[i], 2 * i, {press[i], keys[i], KeyKind::press}});
    evs.push_back({release[i], 2 * i + 1, {release[i], keys[i], KeyKind::release}});
  }
  std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
    return a.t != b.t ? a.t < b.t : a.order < b.order;
  });
  for (const auto& e : evs) rec.keys.events.push_back(e.e);

  const TemplateBank bank(cfg.template_bank_seed, cfg.population_seed, cfg.individuality);
  const double amplitude = std::pow(10.0, cfg.snr_db / 20.0);
  const double clap_time = cfg.duration_pad / 2.0;

  std::uint64_t stream_id = 100;
  for (auto side : {Side::left, Side::right}) {
    const double lag = side == Side::right ? cfg.arm_lag : 0.0;
    for (auto m : {Modality::emg, Modality::acc, Modality::gyro}) {
      SensorStream s;
      s.modality = m;
      s.side = side;
      s.channels = expected_channels(m);
      const std::size_t factor = m == Modality::emg ? 4 : 1;
      const double rate = nominal_rate(m);
      const std::size_t n = imu_intervals * factor + 1;
      s.timestamps.resize(n);
      for (std::size_t i = 0; i < n; ++i) s.timestamps[i] = static_cast<double>(i) / rate;
      s.values.resize(n * s.channels);
      Rng noise = Rng::derive(cfg.seed, stream_id++);
      for (auto& v : s.values) v = noise.normal();

      const std::size_t fused_base = fused_channel_offset(m, side);
      for (std::size_t k = 0; k < n_keys; ++k) {
        const bool active = (typing_arm(keys[k]) == ArmSide::left) == (side == Side::left);
        if (!active) continue;
        // Device-clock window of the template.
        const double lo = press[k] + kTemplateStart + lag;
        const double hi = press[k] + kTemplateEnd + lag;
        const auto i0 = static_cast<std::size_t>(std::max(0.0, std::ceil(lo * rate)));
        const auto i1 = std::min(n - 1, static_cast<std::size_t>(std::floor(hi * rate)));
        for (std::size_t i = i0; i <= i1; ++i) {
          const double tau = s.timestamps[i] - lag - press[k];
          for (std::size_t c = 0; c < s.channels; ++c) {
            s.values[c * n + i] += amplitude * bank.value(keys[k], fused_base + c, tau);
          }
        }
      }

      if (cfg.clap && m == Modality::acc) {
        Rng clap_rng = Rng::derive(cfg.seed, 50);
        for (std::size_t c = 0; c < 3; ++c) {
          const double sign = clap_rng.uniform() < 0.5 ? -1.0 : 1.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double z = (s.timestamps[i] - lag - clap_time) / kClapWidth;
            if (std::abs(z) > 6.0) continue;
            s.values[c * n + i] += sign * kClapAmplitude * std::exp(-0.5 * z * z);
          }
        }
      }
      rec.streams.push_back(std::move(s));
    }
  }
  return rec;
}

}  // namespace emgkey::ingest
