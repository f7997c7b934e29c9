#pragma once

#include "emgkey/core/recording.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emgkey {

inline constexpr std::size_t kFusedChannels = 28;
inline constexpr std::size_t kWindowLength = 50;
inline constexpr std::size_t kPressIndex = 30;

/// Fixed channel order of every fused stream and segment tensor.
inline constexpr std::array<std::string_view, kFusedChannels> kChannelNames{
    "left_emg0",  "left_emg1",  "left_emg2",  "left_emg3",  "left_emg4",  "left_emg5",
    "left_emg6",  "left_emg7",  "left_acc_x", "left_acc_y", "left_acc_z", "left_gyro_x",
    "left_gyro_y", "left_gyro_z", "right_emg0", "right_emg1", "right_emg2", "right_emg3",
    "right_emg4", "right_emg5", "right_emg6", "right_emg7", "right_acc_x", "right_acc_y",
    "right_acc_z", "right_gyro_x", "right_gyro_y", "right_gyro_z"};

constexpr std::array<bool, kFusedChannels> all_channels_mask() {
  std::array<bool, kFusedChannels> mask{};
  for (auto& m : mask) m = true;
  return mask;
}

/// First fused channel of a (modality, side) block.
std::size_t fused_channel_offset(Modality modality, Side side);

/// 28 booleans selecting the channels of the given modalities.
std::array<bool, kFusedChannels> channel_mask(std::span<const Modality> keep);

/// Both armbands on one uniform grid. values[c * length + i] is channel c at
/// time t0 + i / rate.
struct FusedStream {
  RecordingMeta meta;
  double t0 = 0.0;
  double rate = 200.0;
  std::size_t length = 0;
  std::vector<double> values;

  [[nodiscard]] double time(std::size_t i) const {
    return t0 + static_cast<double>(i) / rate;
  }
  [[nodiscard]] std::span<const double> channel(std::size_t c) const {
    return {values.data() + c * length, length};
  }
  /// Nearest grid index of a time (may lie outside [0, length)).
  [[nodiscard]] std::int64_t nearest_index(double t) const;
};

struct SegmentRef {
  std::uint32_t source = 0;
  std::int64_t start = 0;
  /// Time of the grid sample at the press index of the window.
  double center_time = 0.0;
};

/// Fixed-length windows over one or more fused streams.
///
/// Windows are stored as references into the shared fused streams and only
/// copied out on demand, which keeps the per-sample negatives of binary mode
/// cheap. The logical tensor is [size(), 28, window()].
class SegmentBatch {
 public:
  SegmentBatch() = default;
  SegmentBatch(std::vector<std::shared_ptr<const FusedStream>> sources,
               std::vector<SegmentRef> refs, std::size_t window = kWindowLength,
               std::size_t press_index = kPressIndex);

  [[nodiscard]] std::size_t size() const { return refs_.size(); }
  [[nodiscard]] bool empty() const { return refs_.empty(); }
  [[nodiscard]] std::size_t window() const { return window_; }
  [[nodiscard]] std::size_t press_index() const { return press_index_; }
  [[nodiscard]] const std::vector<SegmentRef>& refs() const { return refs_; }
  [[nodiscard]] const std::vector<std::shared_ptr<const FusedStream>>& sources() const {
    return sources_;
  }
  [[nodiscard]] const FusedStream& source_of(std::size_t i) const {
    return *sources_[refs_[i].source];
  }

  [[nodiscard]] const std::optional<std::vector<std::uint8_t>>& binary_labels() const {
    return binary_labels_;
  }
  [[nodiscard]] const std::optional<std::vector<int>>& key_labels() const {
    return key_labels_;
  }
  void set_binary_labels(std::vector<std::uint8_t> labels);
  void set_key_labels(std::vector<int> labels);

  [[nodiscard]] const std::array<bool, kFusedChannels>& mask() const { return mask_; }
  /// Channels with a false entry read as zero.
  void set_mask(const std::array<bool, kFusedChannels>& mask) { mask_ = mask; }

  /// Copies the windows listed in `indices` into `out`, which must hold
  /// indices.size() * 28 * window() values laid out [segment][channel][time].
  template <class T>
  void materialize(std::span<const std::size_t> indices, std::span<T> out) const;

  /// One window as [channel][time].
  [[nodiscard]] std::vector<double> segment(std::size_t i) const;

  [[nodiscard]] SegmentBatch subset(std::span<const std::size_t> indices) const;
  /// Concatenation in argument order; label kinds must agree.
  static SegmentBatch concat(std::span<const SegmentBatch> parts);

 private:
  std::vector<std::shared_ptr<const FusedStream>> sources_;
  std::vector<SegmentRef> refs_;
  std::optional<std::vector<std::uint8_t>> binary_labels_;
  std::optional<std::vector<int>> key_labels_;
  std::array<bool, kFusedChannels> mask_ = all_channels_mask();
  std::size_t window_ = kWindowLength;
  std::size_t press_index_ = kPressIndex;
};

}  // namespace emgkey
