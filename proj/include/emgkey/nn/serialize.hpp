#pragma once

#include "emgkey/nn/train.hpp"

#include <filesystem>

namespace emgkey::nn {

/// Model file layout: the 8 bytes "EMGKNET1", u32 format version, u32 value
/// type (0 = float32, 1 = float64), u64 header length, a JSON header
/// (netspec, provenance, tensor directory) and the raw little-endian tensor
/// values in directory order.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const TrainedNet& model, const std::filesystem::path& path);

/// Throws DataError for unreadable, truncated or incompatible files.
TrainedNet load_model(const std::filesystem::path& path);

nlohmann::json to_json(const TrainingProvenance& p);
TrainingProvenance provenance_from_json(const nlohmann::json& j);

}  // namespace emgkey::nn
