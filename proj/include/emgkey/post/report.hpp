#pragma once

#include "emgkey/post/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emgkey::post {

/// `t,probability`, one row per grid sample.
void write_binary_predictions(const std::filesystem::path& path, const ProbabilityTrack& track);

/// Reads a `t,probability` file whose times lie on a regular grid at `rate`
/// (within 1e-6 s). Throws DataError otherwise.
ProbabilityTrack read_binary_predictions(const std::filesystem::path& path, double rate = 200.0);

/// One keystroke per row: its press time and the 52 class probabilities.
struct ClassPredictions {
  std::vector<double> t;
  std::vector<double> p;  ///< t.size() x 52, row-major

  [[nodiscard]] std::size_t size() const { return t.size(); }
  [[nodiscard]] std::span<const double> row(std::size_t i) const;
};

/// `t,p0,...,p51`.
void write_class_predictions(const std::filesystem::path& path, const ClassPredictions& preds);
ClassPredictions read_class_predictions(const std::filesystem::path& path);

/// Mean and sample standard deviation of the present values.
struct MeanSd {
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> sd;
};

MeanSd mean_sd(std::span<const std::optional<double>> values);

/// "76.1 (9.6)" for 0.761 and 0.096 at scale 100; "n/a" when absent.
std::string format_mean_sd(const MeanSd& m, double scale = 100.0, int decimals = 1);

nlohmann::json to_json(const std::optional<double>& v);
nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const TolerantConfusion& c);
nlohmann::json to_json(const LagStats& s);
nlohmann::json to_json(const SweepPoint& p);
nlohmann::json to_json(const MeanSd& m);

std::optional<double> optional_number(const nlohmann::json& j);

}  // namespace emgkey::post
