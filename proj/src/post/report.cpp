#include "emgkey/post/report.hpp"

#include "emgkey/core/csv.hpp"
#include "emgkey/core/error.hpp"
#include "emgkey/core/keys.hpp"

#include <cmath>
#include <cstdio>

namespace emgkey::post {
namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& class_header() {
  static const std::vector<std::string> header = [] {
    std::vector<std::string> h{"t"};
    for (int k = 0; k < kKeyCount; ++k) h.push_back("p" + std::to_string(k));
    return h;
  }();
  return header;
}

}  // namespace

void write_binary_predictions(const fs::path& path, const ProbabilityTrack& track) {
  std::string out = "t,probability\n";
  for (std::size_t i = 0; i < track.values.size(); ++i) {
    out += csv::format_double(track.time(i));
    out += ',';
    out += csv::format_double(track.values[i]);
    out += '\n';
  }
  csv::write_text(path, out);
}

ProbabilityTrack read_binary_predictions(const fs::path& path, double rate) {
  const auto table = csv::read_numeric(path, {"t", "probability"});
  ProbabilityTrack track;
  track.rate = rate;
  track.t0 = table.t.empty() ? 0.0 : table.t.front();
  track.values = table.cols[0];
  for (std::size_t i = 0; i < table.t.size(); ++i) {
    if (std::abs(table.t[i] - track.time(i)) > 1e-6) {
      throw DataError(path.string() + ":" + std::to_string(i + 2) + ": time is off the " +
                      csv::format_double(rate) + " Hz grid");
    }
  }
  return track;
}

std::span<const double> ClassPredictions::row(std::size_t i) const {
  const auto k = static_cast<std::size_t>(kKeyCount);
  return std::span<const double>(p).subspan(i * k, k);
}

void write_class_predictions(const fs::path& path, const ClassPredictions& preds) {
  const auto k = static_cast<std::size_t>(kKeyCount);
  if (preds.p.size() != preds.t.size() * k) throw ShapeError("class predictions: need 52 values per row");
  std::string out = csv::join(class_header()) + "\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += csv::format_double(preds.t[i]);
    for (std::size_t c = 0; c < k; ++c) {
      out += ',';
      out += csv::format_double(preds.p[i * k + c]);
    }
    out += '\n';
  }
  csv::write_text(path, out);
}

ClassPredictions read_class_predictions(const fs::path& path) {
  const auto table = csv::read_numeric(path, class_header());
  ClassPredictions preds;
  preds.t = table.t;
  preds.p.reserve(table.t.size() * table.cols.size());
  for (std::size_t i = 0; i < table.t.size(); ++i) {
    for (const auto& col : table.cols) preds.p.push_back(col[i]);
  }
  return preds;
}

MeanSd mean_sd(std::span<const std::optional<double>> values) {
  MeanSd m;
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) continue;
    ++m.n;
    sum += *v;
  }
  if (m.n == 0) return m;
  const double mean = sum / static_cast<double>(m.n);
  m.mean = mean;
  if (m.n > 1) {
    double sq = 0.0;
    for (const auto& v : values) {
      if (v) sq += (*v - mean) * (*v - mean);
    }
    m.sd = std::sqrt(sq / static_cast<double>(m.n - 1));
  }
  return m;
}

std::string format_mean_sd(const MeanSd& m, double scale, int decimals) {
  if (!m.mean) return "n/a";
  char buf[64];
  if (m.sd) {
    std::snprintf(buf, sizeof buf, "%.*f (%.*f)", decimals, *m.mean * scale, decimals, *m.sd * scale);
  } else {
    std::snprintf(buf, sizeof buf, "%.*f", decimals, *m.mean * scale);
  }
  return buf;
}

nlohmann::json to_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_number(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

nlohmann::json to_json(const Metrics& m) {
  return {{"accuracy", to_json(m.accuracy)},
          {"balanced_accuracy", to_json(m.balanced_accuracy)},
          {"precision", to_json(m.precision)},
          {"recall", to_json(m.recall)},
          {"specificity", to_json(m.specificity)},
          {"f1", to_json(m.f1)}};
}

nlohmann::json to_json(const TolerantConfusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}, {"total_lag", c.total_lag()}};
}

nlohmann::json to_json(const LagStats& s) {
  return {{"count", s.count}, {"mean", to_json(s.mean)}, {"sd", to_json(s.sd)}};
}

nlohmann::json to_json(const SweepPoint& p) {
  return {{"tolerance", p.tolerance},
          {"confusion", to_json(p.confusion)},
          {"metrics", to_json(p.metrics)},
          {"lag", to_json(p.lags)}};
}

nlohmann::json to_json(const MeanSd& m) {
  return {{"n", m.n}, {"mean", to_json(m.mean)}, {"sd", to_json(m.sd)}};
}

}  // namespace emgkey::post
