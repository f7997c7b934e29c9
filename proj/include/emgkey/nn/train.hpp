#pragma once

#include "emgkey/core/segments.hpp"
#include "emgkey/nn/netspec.hpp"
#include "emgkey/nn/network.hpp"
#include "emgkey/nn/optim.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace emgkey::nn {

enum class Precision { f32, f64 };

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view name);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  /// Trailing fraction of the segments held out for early stopping.
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
  /// Multiclass loss weights; computed from the training labels when absent
  /// and use_class_weights is set.
  std::optional<std::vector<double>> class_weights;
  bool use_class_weights = true;
  /// Binary only: every epoch trains on all positives plus an equally sized
  /// fresh draw of negatives.
  bool subsample_majority = true;
  Precision precision = Precision::f32;
  /// Stop as soon as training-set accuracy reaches this value.
  std::optional<double> target_train_accuracy;
  std::function<void(const EpochLog&)> on_epoch;
};

/// Throws ConfigError for out-of-range settings.
void validate(const TrainConfig& cfg);

/// Canonical description of the reproducibility-relevant settings.
nlohmann::json to_json(const TrainConfig& cfg);

/// Patience rule on a loss sequence: an epoch improves when its loss is
/// strictly below the best so far; training stops once `patience`
/// consecutive epochs fail to improve.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  /// Records the next epoch's loss and returns true when training should stop.
  bool update(double loss);
  [[nodiscard]] bool last_improved() const { return last_improved_; }
  /// 1-based epoch of the best loss, 0 before the first update.
  [[nodiscard]] std::size_t best_epoch() const { return best_epoch_; }
  [[nodiscard]] double best_loss() const { return best_; }
  [[nodiscard]] std::size_t epochs() const { return epoch_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool last_improved_ = false;
};

struct TrainingProvenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double best_val_loss = 0.0;
  std::string stop_reason;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  /// Hash of the enclosing experiment configuration, set by the caller.
  std::string experiment_hash;
};

/// Parameters and running statistics of the best validation epoch. Values are
/// stored in double precision; float training round-trips exactly.
struct TrainedNet {
  NetSpec spec;
  Precision precision = Precision::f32;
  std::vector<NamedTensor<double>> state;
  TrainingProvenance provenance;
};

/// Trains `net` on the labelled segments. The validation set is the trailing
/// val_fraction of `data`, or `validation` when given (all of `data` then
/// trains). Throws ConfigError when the head does not match the labels and
/// NumericError naming the epoch when the loss stops being finite.
TrainedNet train(const NetSpec& net, const SegmentBatch& data, const TrainConfig& cfg,
                 const SegmentBatch* validation = nullptr);

/// Inference wrapper around a TrainedNet.
class Classifier {
 public:
  explicit Classifier(const TrainedNet& model);
  ~Classifier();
  Classifier(Classifier&&) noexcept;
  Classifier& operator=(Classifier&&) noexcept;

  [[nodiscard]] Head head() const { return head_; }
  /// Class probabilities, [N, 1] (sigmoid) or [N, 52] (softmax). With
  /// jobs > 1 fixed-size chunks are evaluated concurrently; results do not
  /// depend on the job count.
  [[nodiscard]] Tensor<double> probabilities(const SegmentBatch& data, std::size_t jobs = 1,
                                             std::size_t chunk = 256) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Head head_;
};

}  // namespace emgkey::nn
