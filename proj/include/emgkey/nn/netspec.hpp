#pragma once

#include "emgkey/nn/tensor.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace emgkey::nn {

enum class LayerKind {
  input,
  batch_norm,
  conv1d,
  conv2d,
  relu,
  sigmoid,
  tanh,
  softmax,
  max_pool1d,
  dropout,
  lstm,
  add,
  gated,
  global_avg_pool,
  flatten,
  linear,
  cwt,
};

std::string_view to_string(LayerKind kind);
/// Throws ConfigError for unknown names.
LayerKind parse_layer_kind(std::string_view name);

enum class Head { binary, multiclass };

std::string_view to_string(Head head);
Head parse_head(std::string_view name);
/// 1 for binary, 52 for multiclass.
std::size_t head_outputs(Head head);

/// Hyperparameters of one layer; only the fields relevant to its kind are used.
struct LayerAttrs {
  std::size_t in = 0;        // input channels / features
  std::size_t out = 0;       // output channels / features
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t groups = 1;
  std::size_t pad_left = 0;  // conv2d uses this as symmetric padding
  std::size_t pad_right = 0;
  std::size_t units = 0;     // lstm
  bool bias = true;
  bool return_sequences = false;
  bool trainable = true;     // false freezes the layer's parameters
  double p = 0.0;            // dropout
  double momentum = 0.1;     // batch_norm
  double eps = 1e-5;         // batch_norm
  double w0 = 6.0;           // cwt
  double dj = 0.125;
  double dt = 0.005;
  std::size_t scales = 0;

  bool operator==(const LayerAttrs&) const = default;
};

struct LayerNode {
  std::string name;
  LayerKind kind = LayerKind::input;
  /// Indices of earlier nodes; node 0 is the network input.
  std::vector<std::size_t> inputs;
  LayerAttrs attrs;

  bool operator==(const LayerNode&) const = default;
};

/// A directed acyclic layer graph with every hyperparameter resolved. Node 0
/// is the input [channels, length]; the last node is the output.
struct NetSpec {
  std::string architecture;
  Head head = Head::binary;
  std::vector<LayerNode> nodes;

  bool operator==(const NetSpec&) const = default;
};

/// Builds a NetSpec node by node.
class NetBuilder {
 public:
  NetBuilder(std::string architecture, Head head, std::size_t channels, std::size_t length);

  /// Appends a node and returns its index.
  std::size_t add(std::string name, LayerKind kind, std::vector<std::size_t> inputs,
                  LayerAttrs attrs = {});
  [[nodiscard]] NetSpec build() const;

 private:
  NetSpec spec_;
};

enum class Init { he_uniform, fan_in_uniform, lstm_uniform, zeros, ones };

struct ParamSpec {
  std::string suffix;  // "weight", "bias", ...
  Shape shape;
  Init init;
  std::size_t fan_in = 0;
};

/// Learnable tensors of a layer in declaration order.
std::vector<ParamSpec> layer_parameters(const LayerNode& node);

/// Output shape of every node without the batch axis. Throws ShapeError
/// naming the layer for inconsistent graphs, and ConfigError for malformed
/// wiring (forward references, wrong input count).
std::vector<Shape> infer_shapes(const NetSpec& spec);

std::size_t parameter_count(const NetSpec& spec);

/// Temporal receptive field in input samples of a node in a 1-D
/// convolutional chain. Throws ConfigError once the time axis has been
/// collapsed (lstm, pooling to vectors, 2-D stages).
std::size_t receptive_field(const NetSpec& spec, std::size_t node);

/// Index of the node with the given name; throws ConfigError when absent.
std::size_t find_node(const NetSpec& spec, std::string_view name);

nlohmann::json to_json(const NetSpec& spec);
/// Throws ConfigError for malformed documents.
NetSpec netspec_from_json(const nlohmann::json& doc);

}  // namespace emgkey::nn
