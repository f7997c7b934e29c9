#pragma once

#include "emgkey/nn/graph.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace emgkey::nn {

enum class OptimizerKind { adam, rmsprop };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  /// Decoupled L2 decay: every step first scales weights by (1 - lr * decay).
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double alpha = 0.99;  // rmsprop smoothing
  double eps = 1e-8;
  std::size_t batch_size = 32;
};

/// Throws ConfigError unless rate > 0, decay >= 0, batch_size >= 1 and the
/// moment coefficients lie in [0, 1).
void validate(const OptimizerConfig& cfg);

template <class T>
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, std::vector<Var<T>> params);

  /// One update from the accumulated gradients (missing gradients count as zero).
  void step();
  void zero_grad();
  [[nodiscard]] std::size_t steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<Var<T>> params_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  std::size_t t_ = 0;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace emgkey::nn
