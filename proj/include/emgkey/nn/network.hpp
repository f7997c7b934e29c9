#pragma once

#include "emgkey/core/random.hpp"
#include "emgkey/nn/netspec.hpp"
#include "emgkey/nn/ops.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace emgkey::nn {

template <class T>
struct NamedTensor {
  std::string name;
  Tensor<T> value;
};

/// A NetSpec bound to parameter storage.
///
/// Parameters are named "<layer>.<suffix>" (e.g. "stage1.conv1.weight");
/// batch-norm running statistics are buffers named "<layer>.running_mean"
/// and "<layer>.running_var". Initialisation is a pure function of the seed.
template <class T>
class Network {
 public:
  Network(NetSpec spec, std::uint64_t seed);
  ~Network();
  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;

  [[nodiscard]] const NetSpec& spec() const { return spec_; }

  /// Logits [B, 1] or [B, 52] for an input [B, channels, length].
  Var<T> forward(const Var<T>& input, bool training);
  /// Output of every node, indexed like spec().nodes.
  std::vector<Var<T>> forward_all(const Var<T>& input, bool training);

  /// Every learnable tensor in declaration order, frozen ones included.
  [[nodiscard]] std::vector<std::pair<std::string, Var<T>>> parameters() const;
  /// Parameters that receive optimiser updates.
  [[nodiscard]] std::vector<Var<T>> trainable() const;
  [[nodiscard]] std::size_t parameter_count() const;

  /// Parameters followed by buffers, by name.
  [[nodiscard]] std::vector<NamedTensor<T>> state() const;
  /// Restores a state; names and shapes must match exactly.
  void load_state(const std::vector<NamedTensor<T>>& state);

  /// Restarts the dropout random stream.
  void set_dropout_seed(std::uint64_t seed);
  void zero_grad();

 private:
  struct Layer;
  NetSpec spec_;
  std::vector<Shape> shapes_;
  std::vector<std::unique_ptr<Layer>> layers_;
  Rng dropout_rng_{0};
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace emgkey::nn
