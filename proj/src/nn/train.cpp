#include "emgkey/nn/train.hpp"

#include "emgkey/core/error.hpp"
#include "emgkey/core/hash.hpp"
#include "emgkey/core/keys.hpp"
#include "emgkey/core/parallel.hpp"
#include "emgkey/preprocess/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emgkey::nn {
namespace {

struct LossParts {
  double sum = 0.0;     // weighted loss sum
  double weight = 0.0;  // sum of weights
};

template <class T>
class Trainer {
 public:
  Trainer(const NetSpec& spec, const SegmentBatch& data, const TrainConfig& cfg,
          const SegmentBatch* validation)
      : spec_(spec), data_(data), cfg_(cfg), net_(spec, cfg.seed) {
    binary_ = spec.head == Head::binary;
    if (binary_ && !data.binary_labels()) {
      throw ConfigError("train: binary head needs binary-labelled segments");
    }
    if (!binary_ && !data.key_labels()) {
      throw ConfigError("train: multiclass head needs key-labelled segments");
    }
    if (data.window() != infer_shapes(spec)[0][1]) {
      throw ConfigError("train: segment window does not match the network input length");
    }
    if (validation) {
      train_idx_.resize(data.size());
      std::iota(train_idx_.begin(), train_idx_.end(), std::size_t{0});
      val_ = *validation;
      if ((binary_ && !val_.binary_labels()) || (!binary_ && !val_.key_labels())) {
        throw ConfigError("train: validation segments carry the wrong label kind");
      }
    } else {
      const auto n = data.size();
      const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.val_fraction));
      if (n_val == 0 || n_val >= n) {
        throw ConfigError("train: " + std::to_string(n) +
                          " segments are too few for the validation split");
      }
      train_idx_.resize(n - n_val);
      std::iota(train_idx_.begin(), train_idx_.end(), std::size_t{0});
      std::vector<std::size_t> tail(n_val);
      std::iota(tail.begin(), tail.end(), n - n_val);
      val_ = data.subset(tail);
    }
    if (train_idx_.empty() || val_.empty()) throw ConfigError("train: empty training or validation set");

    if (binary_) {
      const auto& vl = *val_.binary_labels();
      const bool both = std::count(vl.begin(), vl.end(), 1) > 0 && std::count(vl.begin(), vl.end(), 0) > 0;
      if (cfg.subsample_majority && both) {
        const auto keep = preprocess::subsample_majority(vl, cfg.seed, UINT64_MAX);
        val_ = val_.subset(keep);
      }
    } else {
      if (cfg.class_weights) {
        if (cfg.class_weights->size() != kKeyCount) {
          throw ConfigError("train: class_weights must have 52 entries");
        }
        weights_.assign(cfg.class_weights->begin(), cfg.class_weights->end());
      } else if (cfg.use_class_weights) {
        std::vector<int> labels;
        for (auto i : train_idx_) labels.push_back((*data.key_labels())[i]);
        const auto w = preprocess::class_weights(labels, static_cast<int>(kKeyCount));
        weights_.assign(w.begin(), w.end());
      }
    }
    net_.set_dropout_seed(cfg.seed);
  }

  TrainedNet run() {
    Optimizer<T> opt(cfg_.optimizer, net_.trainable());
    EarlyStopping stopper(cfg_.patience);
    auto best = net_.state();
    TrainedNet out;
    out.spec = spec_;
    out.precision = std::is_same_v<T, float> ? Precision::f32 : Precision::f64;
    auto& prov = out.provenance;
    prov.seed = cfg_.seed;
    prov.config_hash = hex64(fnv1a64(to_json(spec_).dump() + to_json(cfg_).dump()));
    prov.stop_reason = "max_epochs";

    for (std::size_t epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
      auto idx = epoch_indices(epoch);
      Rng::derive(cfg_.seed, 0x7EA10000ULL + epoch).shuffle(idx.begin(), idx.end());
      const auto bs = cfg_.optimizer.batch_size;
      LossParts train_loss;
      for (std::size_t start = 0; start < idx.size(); start += bs) {
        const auto stop = std::min(idx.size(), start + bs);
        // A lone trailing sample cannot form batch statistics.
        if (stop - start == 1 && idx.size() > 1) break;
        const std::span<const std::size_t> batch(idx.data() + start, stop - start);
        auto x = constant(inputs(data_, batch));
        auto loss = loss_of(net_.forward(x, true), data_, batch);
        const double lv = static_cast<double>(loss->value[0]);
        if (!std::isfinite(lv)) {
          throw NumericError("training diverged: loss is not finite at epoch " + std::to_string(epoch));
        }
        backward(loss);
        opt.step();
        opt.zero_grad();
        train_loss.sum += lv * static_cast<double>(batch.size());
        train_loss.weight += static_cast<double>(batch.size());
      }
      const double val_loss = evaluate_loss(val_);
      if (!std::isfinite(val_loss)) {
        throw NumericError("training diverged: validation loss is not finite at epoch " +
                           std::to_string(epoch));
      }
      const bool stop = stopper.update(val_loss);
      if (stopper.last_improved()) best = net_.state();
      const double tl = train_loss.weight > 0 ? train_loss.sum / train_loss.weight : 0.0;
      prov.train_loss.push_back(tl);
      prov.val_loss.push_back(val_loss);
      prov.epochs_run = epoch;
      if (cfg_.on_epoch) cfg_.on_epoch({epoch, tl, val_loss, stopper.last_improved()});
      if (cfg_.target_train_accuracy && train_accuracy() >= *cfg_.target_train_accuracy) {
        // The epoch that reached the target is returned as is.
        best = net_.state();
        prov.stop_reason = "target_accuracy";
        prov.best_epoch = epoch;
        prov.best_val_loss = val_loss;
        return finish(std::move(out), best);
      }
      if (stop) {
        prov.stop_reason = "early_stopping";
        break;
      }
    }
    prov.best_epoch = stopper.best_epoch();
    prov.best_val_loss = stopper.best_loss();
    return finish(std::move(out), best);
  }

 private:
  TrainedNet finish(TrainedNet out, const std::vector<NamedTensor<T>>& best) {
    for (const auto& t : best) out.state.push_back({t.name, t.value.template cast<double>()});
    return out;
  }

  std::vector<std::size_t> epoch_indices(std::size_t epoch) const {
    if (!binary_ || !cfg_.subsample_majority) return train_idx_;
    std::vector<std::uint8_t> labels;
    for (auto i : train_idx_) labels.push_back((*data_.binary_labels())[i]);
    const auto keep = preprocess::subsample_majority(labels, cfg_.seed, epoch);
    std::vector<std::size_t> out;
    out.reserve(keep.size());
    for (auto k : keep) out.push_back(train_idx_[k]);
    return out;
  }

  Tensor<T> inputs(const SegmentBatch& src, std::span<const std::size_t> batch) const {
    Tensor<T> x({batch.size(), kFusedChannels, src.window()});
    src.materialize<T>(batch, x.values());
    return x;
  }

  Var<T> loss_of(const Var<T>& logits, const SegmentBatch& src, std::span<const std::size_t> batch,
                 LossParts* parts = nullptr) const {
    if (binary_) {
      std::vector<T> targets;
      for (auto i : batch) targets.push_back(T((*src.binary_labels())[i]));
      if (parts) parts->weight += static_cast<double>(batch.size());
      return bce_with_logits<T>(logits, targets, {});
    }
    std::vector<int> labels;
    for (auto i : batch) labels.push_back((*src.key_labels())[i]);
    if (parts) {
      for (int y : labels) parts->weight += weights_.empty() ? 1.0 : weights_[static_cast<std::size_t>(y)];
    }
    return cross_entropy<T>(logits, labels, weights_);
  }

  double evaluate_loss(const SegmentBatch& src) {
    NoGradGuard guard;
    LossParts total;
    constexpr std::size_t chunk = 256;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < src.size(); start += chunk) {
      idx.resize(std::min(src.size(), start + chunk) - start);
      std::iota(idx.begin(), idx.end(), start);
      LossParts part;
      const auto loss = loss_of(net_.forward(constant(inputs(src, idx)), false), src, idx, &part);
      if (part.weight > 0) total.sum += static_cast<double>(loss->value[0]) * part.weight;
      total.weight += part.weight;
    }
    return total.weight > 0 ? total.sum / total.weight : 0.0;
  }

  double train_accuracy() {
    NoGradGuard guard;
    std::size_t correct = 0;
    constexpr std::size_t chunk = 256;
    for (std::size_t start = 0; start < train_idx_.size(); start += chunk) {
      const std::span<const std::size_t> batch(train_idx_.data() + start,
                                               std::min(train_idx_.size() - start, chunk));
      const auto logits = net_.forward(constant(inputs(data_, batch)), false)->value;
      for (std::size_t r = 0; r < batch.size(); ++r) {
        if (binary_) {
          const bool pred = logits[r] > T(0);
          correct += pred == ((*data_.binary_labels())[batch[r]] != 0);
        } else {
          const T* row = logits.data() + r * kKeyCount;
          const auto arg = static_cast<int>(std::max_element(row, row + kKeyCount) - row);
          correct += arg == (*data_.key_labels())[batch[r]];
        }
      }
    }
    return static_cast<double>(correct) / static_cast<double>(train_idx_.size());
  }

  const NetSpec& spec_;
  const SegmentBatch& data_;
  const TrainConfig& cfg_;
  Network<T> net_;
  bool binary_ = true;
  std::vector<std::size_t> train_idx_;
  SegmentBatch val_;
  std::vector<T> weights_;
};

}  // namespace

std::string_view to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view name) {
  if (name == "f32" || name == "float") return Precision::f32;
  if (name == "f64" || name == "double") return Precision::f64;
  throw ConfigError("unknown precision '" + std::string(name) + "' (expected f32 or f64)");
}

void validate(const TrainConfig& cfg) {
  validate(cfg.optimizer);
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) {
    throw ConfigError("train: val_fraction must lie in (0, 1)");
  }
  if (cfg.patience == 0) throw ConfigError("train: patience must be at least 1");
  if (cfg.max_epochs == 0) throw ConfigError("train: max_epochs must be at least 1");
  if (cfg.target_train_accuracy && !(*cfg.target_train_accuracy > 0.0 && *cfg.target_train_accuracy <= 1.0)) {
    throw ConfigError("train: target_train_accuracy must lie in (0, 1]");
  }
}

nlohmann::json to_json(const TrainConfig& cfg) {
  const auto& o = cfg.optimizer;
  nlohmann::json j{
      {"optimizer",
       {{"kind", std::string(to_string(o.kind))},
        {"learning_rate", o.learning_rate},
        {"weight_decay", o.weight_decay},
        {"beta1", o.beta1},
        {"beta2", o.beta2},
        {"alpha", o.alpha},
        {"eps", o.eps},
        {"batch_size", o.batch_size}}},
      {"max_epochs", cfg.max_epochs},
      {"patience", cfg.patience},
      {"val_fraction", cfg.val_fraction},
      {"seed", cfg.seed},
      {"use_class_weights", cfg.use_class_weights},
      {"subsample_majority", cfg.subsample_majority},
      {"precision", std::string(to_string(cfg.precision))},
  };
  if (cfg.class_weights) j["class_weights"] = *cfg.class_weights;
  if (cfg.target_train_accuracy) j["target_train_accuracy"] = *cfg.target_train_accuracy;
  return j;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw ConfigError("early stopping: patience must be at least 1");
}

bool EarlyStopping::update(double loss) {
  ++epoch_;
  last_improved_ = loss < best_;
  if (last_improved_) {
    best_ = loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return since_best_ >= patience_;
}

TrainedNet train(const NetSpec& net, const SegmentBatch& data, const TrainConfig& cfg,
                 const SegmentBatch* validation) {
  validate(cfg);
  if (cfg.precision == Precision::f32) return Trainer<float>(net, data, cfg, validation).run();
  return Trainer<double>(net, data, cfg, validation).run();
}

struct Classifier::Impl {
  std::unique_ptr<Network<float>> f32;
  std::unique_ptr<Network<double>> f64;
};

namespace {

template <class T>
std::unique_ptr<Network<T>> bind(const TrainedNet& model) {
  auto net = std::make_unique<Network<T>>(model.spec, 0);
  std::vector<NamedTensor<T>> state;
  for (const auto& t : model.state) state.push_back({t.name, t.value.template cast<T>()});
  net->load_state(state);
  return net;
}

template <class T>
void predict_into(Network<T>& net, Head head, const SegmentBatch& data,
                  std::span<const std::size_t> idx, double* out) {
  NoGradGuard guard;
  Tensor<T> x({idx.size(), kFusedChannels, data.window()});
  data.materialize<T>(idx, x.values());
  const auto logits = net.forward(constant(std::move(x)), false)->value;
  const auto k = logits.dim(1);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const T* row = logits.data() + r * k;
    double* dst = out + r * k;
    if (head == Head::binary) {
      const double z = static_cast<double>(row[0]);
      dst[0] = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      continue;
    }
    const double mx = static_cast<double>(*std::max_element(row, row + k));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += (dst[j] = std::exp(static_cast<double>(row[j]) - mx));
    for (std::size_t j = 0; j < k; ++j) dst[j] /= sum;
  }
}

}  // namespace

Classifier::Classifier(const TrainedNet& model) : impl_(std::make_unique<Impl>()), head_(model.spec.head) {
  if (model.precision == Precision::f32) {
    impl_->f32 = bind<float>(model);
  } else {
    impl_->f64 = bind<double>(model);
  }
}

Classifier::~Classifier() = default;
Classifier::Classifier(Classifier&&) noexcept = default;
Classifier& Classifier::operator=(Classifier&&) noexcept = default;

Tensor<double> Classifier::probabilities(const SegmentBatch& data, std::size_t jobs,
                                         std::size_t chunk) const {
  const auto k = head_outputs(head_);
  Tensor<double> out({data.size(), k});
  if (data.empty()) return out;
  chunk = std::max<std::size_t>(chunk, 1);
  const auto n_chunks = (data.size() + chunk - 1) / chunk;
  auto work = [&](std::size_t c) {
    const auto start = c * chunk;
    std::vector<std::size_t> idx(std::min(data.size(), start + chunk) - start);
    std::iota(idx.begin(), idx.end(), start);
    if (impl_->f32) {
      predict_into(*impl_->f32, head_, data, idx, out.data() + start * k);
    } else {
      predict_into(*impl_->f64, head_, data, idx, out.data() + start * k);
    }
  };
  parallel_for(n_chunks, jobs, work);
  return out;
}

}  // namespace emgkey::nn
