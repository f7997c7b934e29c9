#include "emgkey/core/segments.hpp"

#include "emgkey/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace emgkey {

std::size_t fused_channel_offset(Modality modality, Side side) {
  const std::size_t arm = side == Side::left ? 0 : 14;
  switch (modality) {
    case Modality::emg: return arm;
    case Modality::acc: return arm + 8;
    case Modality::gyro: return arm + 11;
  }
  return arm;
}

std::array<bool, kFusedChannels> channel_mask(std::span<const Modality> keep) {
  std::array<bool, kFusedChannels> mask{};
  for (auto m : keep) {
    for (auto side : {Side::left, Side::right}) {
      const auto off = fused_channel_offset(m, side);
      for (std::size_t c = 0; c < expected_channels(m); ++c) mask[off + c] = true;
    }
  }
  return mask;
}

std::int64_t FusedStream::nearest_index(double t) const {
  return static_cast<std::int64_t>(std::llround((t - t0) * rate));
}

SegmentBatch::SegmentBatch(std::vector<std::shared_ptr<const FusedStream>> sources,
                           std::vector<SegmentRef> refs, std::size_t window,
                           std::size_t press_index)
    : sources_(std::move(sources)),
      refs_(std::move(refs)),
      window_(window),
      press_index_(press_index) {
  for (const auto& r : refs_) {
    if (r.source >= sources_.size()) throw ConfigError("segment references unknown source");
    const auto& src = *sources_[r.source];
    if (r.start < 0 || static_cast<std::size_t>(r.start) + window_ > src.length) {
      throw ConfigError("segment window outside its fused stream");
    }
  }
}

void SegmentBatch::set_binary_labels(std::vector<std::uint8_t> labels) {
  if (labels.size() != refs_.size()) throw ConfigError("binary label count mismatch");
  binary_labels_ = std::move(labels);
}

void SegmentBatch::set_key_labels(std::vector<int> labels) {
  if (labels.size() != refs_.size()) throw ConfigError("key label count mismatch");
  key_labels_ = std::move(labels);
}

template <class T>
void SegmentBatch::materialize(std::span<const std::size_t> indices, std::span<T> out) const {
  const std::size_t per = kFusedChannels * window_;
  if (out.size() != indices.size() * per) throw ShapeError("materialize: output size mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& ref = refs_.at(indices[k]);
    const auto& src = *sources_[ref.source];
    T* dst = out.data() + k * per;
    for (std::size_t c = 0; c < kFusedChannels; ++c) {
      T* row = dst + c * window_;
      if (!mask_[c]) {
        std::fill(row, row + window_, T(0));
        continue;
      }
      const double* from = src.values.data() + c * src.length + ref.start;
      for (std::size_t i = 0; i < window_; ++i) row[i] = static_cast<T>(from[i]);
    }
  }
}

template void SegmentBatch::materialize<float>(std::span<const std::size_t>, std::span<float>) const;
template void SegmentBatch::materialize<double>(std::span<const std::size_t>,
                                                std::span<double>) const;

std::vector<double> SegmentBatch::segment(std::size_t i) const {
  std::vector<double> out(kFusedChannels * window_);
  const std::size_t idx[1] = {i};
  materialize<double>(idx, out);
  return out;
}

SegmentBatch SegmentBatch::subset(std::span<const std::size_t> indices) const {
  SegmentBatch out;
  out.sources_ = sources_;
  out.window_ = window_;
  out.press_index_ = press_index_;
  out.mask_ = mask_;
  out.refs_.reserve(indices.size());
  for (auto i : indices) out.refs_.push_back(refs_.at(i));
  if (binary_labels_) {
    std::vector<std::uint8_t> l;
    for (auto i : indices) l.push_back((*binary_labels_)[i]);
    out.binary_labels_ = std::move(l);
  }
  if (key_labels_) {
    std::vector<int> l;
    for (auto i : indices) l.push_back((*key_labels_)[i]);
    out.key_labels_ = std::move(l);
  }
  return out;
}

SegmentBatch SegmentBatch::concat(std::span<const SegmentBatch> parts) {
  SegmentBatch out;
  if (parts.empty()) return out;
  out.window_ = parts.front().window_;
  out.press_index_ = parts.front().press_index_;
  out.mask_ = parts.front().mask_;
  const bool binary = parts.front().binary_labels_.has_value();
  const bool keys = parts.front().key_labels_.has_value();
  std::vector<std::uint8_t> bl;
  std::vector<int> kl;
  std::map<const FusedStream*, std::uint32_t> source_ids;
  for (const auto& p : parts) {
    if (p.window_ != out.window_ || p.press_index_ != out.press_index_) {
      throw ConfigError("concat: window geometry differs between parts");
    }
    if (p.binary_labels_.has_value() != binary || p.key_labels_.has_value() != keys) {
      throw ConfigError("concat: label kinds differ between parts");
    }
    for (std::size_t i = 0; i < p.refs_.size(); ++i) {
      const auto& src = p.sources_[p.refs_[i].source];
      auto [it, inserted] =
          source_ids.try_emplace(src.get(), static_cast<std::uint32_t>(out.sources_.size()));
      if (inserted) out.sources_.push_back(src);
      auto ref = p.refs_[i];
      ref.source = it->second;
      out.refs_.push_back(ref);
      if (binary) bl.push_back((*p.binary_labels_)[i]);
      if (keys) kl.push_back((*p.key_labels_)[i]);
    }
  }
  if (binary) out.binary_labels_ = std::move(bl);
  if (keys) out.key_labels_ = std::move(kl);
  return out;
}

}  // namespace emgkey
