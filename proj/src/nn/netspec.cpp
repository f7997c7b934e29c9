#include "emgkey/nn/netspec.hpp"

#include "emgkey/core/error.hpp"
#include "emgkey/core/keys.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace emgkey::nn {
namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 17> kKindNames{{
    {LayerKind::input, "input"},
    {LayerKind::batch_norm, "batch_norm"},
    {LayerKind::conv1d, "conv1d"},
    {LayerKind::conv2d, "conv2d"},
    {LayerKind::relu, "relu"},
    {LayerKind::sigmoid, "sigmoid"},
    {LayerKind::tanh, "tanh"},
    {LayerKind::softmax, "softmax"},
    {LayerKind::max_pool1d, "max_pool1d"},
    {LayerKind::dropout, "dropout"},
    {LayerKind::lstm, "lstm"},
    {LayerKind::add, "add"},
    {LayerKind::gated, "gated"},
    {LayerKind::global_avg_pool, "global_avg_pool"},
    {LayerKind::flatten, "flatten"},
    {LayerKind::linear, "linear"},
    {LayerKind::cwt, "cwt"},
}};

[[noreturn]] void shape_fail(const LayerNode& node, const std::string& why,
                             const std::vector<Shape>& in) {
  std::string shapes;
  for (const auto& s : in) shapes += (shapes.empty() ? "" : ", ") + to_string(s);
  throw ShapeError("layer '" + node.name + "' (" + std::string(to_string(node.kind)) + "): " + why +
                   "; input shapes " + shapes);
}

std::size_t expected_inputs(LayerKind kind) {
  switch (kind) {
    case LayerKind::input: return 0;
    case LayerKind::add: return 2;  // minimum
    case LayerKind::gated: return 2;
    default: return 1;
  }
}

Shape infer_node(const LayerNode& node, const std::vector<Shape>& in) {
  const auto& a = node.attrs;
  auto need_rank = [&](std::size_t r) {
    if (in[0].size() != r) shape_fail(node, "expected rank " + std::to_string(r), in);
  };
  auto need_channels = [&](std::size_t c) {
    if (in[0].empty() || in[0][0] != c) {
      shape_fail(node, "expected " + std::to_string(c) + " input channels", in);
    }
  };
  switch (node.kind) {
    case LayerKind::input:
      return {a.in, a.out};
    case LayerKind::batch_norm:
      need_channels(a.in);
      return in[0];
    case LayerKind::conv1d: {
      need_rank(2);
      need_channels(a.in);
      if (a.groups == 0 || a.in % a.groups || a.out % a.groups) {
        shape_fail(node, "channels not divisible by " + std::to_string(a.groups) + " groups", in);
      }
      if (a.stride != 1) shape_fail(node, "only stride 1 is supported", in);
      const auto span = a.dilation * (a.kernel - 1) + 1;
      const auto padded = in[0][1] + a.pad_left + a.pad_right;
      if (a.kernel == 0 || padded < span) shape_fail(node, "kernel span exceeds input", in);
      return {a.out, padded - span + 1};
    }
    case LayerKind::conv2d: {
      need_rank(3);
      need_channels(a.in);
      const auto p = a.pad_left;
      if (a.kernel == 0 || a.stride == 0 || in[0][1] + 2 * p < a.kernel ||
          in[0][2] + 2 * p < a.kernel) {
        shape_fail(node, "kernel exceeds input", in);
      }
      return {a.out, (in[0][1] + 2 * p - a.kernel) / a.stride + 1,
              (in[0][2] + 2 * p - a.kernel) / a.stride + 1};
    }
    case LayerKind::relu:
    case LayerKind::sigmoid:
    case LayerKind::tanh:
      return in[0];
    case LayerKind::dropout:
      if (a.p < 0.0 || a.p >= 1.0) shape_fail(node, "dropout rate outside [0, 1)", in);
      return in[0];
    case LayerKind::softmax:
      need_rank(1);
      return in[0];
    case LayerKind::max_pool1d:
      need_rank(2);
      if (a.kernel == 0 || a.stride == 0 || a.kernel > in[0][1]) {
        shape_fail(node, "pool window exceeds input", in);
      }
      return {in[0][0], (in[0][1] - a.kernel) / a.stride + 1};
    case LayerKind::lstm:
      need_rank(2);
      need_channels(a.in);
      if (a.units == 0) shape_fail(node, "zero units", in);
      if (a.return_sequences) return {a.units, in[0][1]};
      return {a.units};
    case LayerKind::add:
    case LayerKind::gated:
      for (const auto& s : in) {
        if (s != in[0]) shape_fail(node, "inputs differ in shape", in);
      }
      return in[0];
    case LayerKind::global_avg_pool:
      if (in[0].size() < 2) shape_fail(node, "expected rank >= 2", in);
      return {in[0][0]};
    case LayerKind::flatten:
      return {numel(in[0])};
    case LayerKind::linear:
      need_rank(1);
      need_channels(a.in);
      return {a.out};
    case LayerKind::cwt:
      need_rank(2);
      if (a.scales == 0) shape_fail(node, "zero scales", in);
      return {in[0][0], a.scales, in[0][1]};
  }
  shape_fail(node, "unknown layer kind", in);
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, n] : kKindNames) {
    if (k == kind) return n;
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

std::string_view to_string(Head head) { return head == Head::binary ? "binary" : "multiclass"; }

Head parse_head(std::string_view name) {
  if (name == "binary") return Head::binary;
  if (name == "multiclass") return Head::multiclass;
  throw ConfigError("unknown head '" + std::string(name) + "' (expected binary or multiclass)");
}

std::size_t head_outputs(Head head) { return head == Head::binary ? 1 : kKeyCount; }

NetBuilder::NetBuilder(std::string architecture, Head head, std::size_t channels,
                       std::size_t length) {
  spec_.architecture = std::move(architecture);
  spec_.head = head;
  LayerAttrs a;
  a.in = channels;
  a.out = length;
  spec_.nodes.push_back({"input", LayerKind::input, {}, a});
}

std::size_t NetBuilder::add(std::string name, LayerKind kind, std::vector<std::size_t> inputs,
                            LayerAttrs attrs) {
  spec_.nodes.push_back({std::move(name), kind, std::move(inputs), attrs});
  return spec_.nodes.size() - 1;
}

NetSpec NetBuilder::build() const {
  infer_shapes(spec_);
  return spec_;
}

std::vector<ParamSpec> layer_parameters(const LayerNode& node) {
  const auto& a = node.attrs;
  std::vector<ParamSpec> out;
  switch (node.kind) {
    case LayerKind::batch_norm:
      out.push_back({"gamma", {a.in}, Init::ones, 0});
      out.push_back({"beta", {a.in}, Init::zeros, 0});
      break;
    case LayerKind::conv1d: {
      const auto fan_in = (a.in / std::max<std::size_t>(a.groups, 1)) * a.kernel;
      out.push_back({"weight", {a.out, a.in / std::max<std::size_t>(a.groups, 1), a.kernel},
                     Init::he_uniform, fan_in});
      if (a.bias) out.push_back({"bias", {a.out}, Init::zeros, 0});
      break;
    }
    case LayerKind::conv2d:
      out.push_back({"weight", {a.out, a.in, a.kernel, a.kernel}, Init::he_uniform,
                     a.in * a.kernel * a.kernel});
      if (a.bias) out.push_back({"bias", {a.out}, Init::zeros, 0});
      break;
    case LayerKind::lstm:
      out.push_back({"w_ih", {4 * a.units, a.in}, Init::lstm_uniform, a.units});
      out.push_back({"w_hh", {4 * a.units, a.units}, Init::lstm_uniform, a.units});
      out.push_back({"bias", {4 * a.units}, Init::zeros, 0});
      break;
    case LayerKind::linear:
      out.push_back({"weight", {a.out, a.in}, Init::fan_in_uniform, a.in});
      if (a.bias) out.push_back({"bias", {a.out}, Init::zeros, 0});
      break;
    default:
      break;
  }
  return out;
}

std::vector<Shape> infer_shapes(const NetSpec& spec) {
  if (spec.nodes.empty() || spec.nodes[0].kind != LayerKind::input) {
    throw ConfigError("netspec: node 0 must be the input");
  }
  std::vector<Shape> shapes;
  shapes.reserve(spec.nodes.size());
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const auto& node = spec.nodes[i];
    if (i > 0 && node.kind == LayerKind::input) {
      throw ConfigError("netspec: layer '" + node.name + "' is a second input");
    }
    const auto want = expected_inputs(node.kind);
    const bool count_ok = node.kind == LayerKind::add ? node.inputs.size() >= want
                                                      : node.inputs.size() == want;
    if (!count_ok) {
      throw ConfigError("netspec: layer '" + node.name + "' has " +
                        std::to_string(node.inputs.size()) + " inputs");
    }
    std::vector<Shape> in;
    for (auto j : node.inputs) {
      if (j >= i) throw ConfigError("netspec: layer '" + node.name + "' reads a later node");
      in.push_back(shapes[j]);
    }
    shapes.push_back(infer_node(node, in));
  }
  const Shape want_out{head_outputs(spec.head)};
  if (shapes.back() != want_out) {
    throw ShapeError("netspec: output shape " + to_string(shapes.back()) + " does not match the " +
                     std::string(to_string(spec.head)) + " head " + to_string(want_out));
  }
  return shapes;
}

std::size_t parameter_count(const NetSpec& spec) {
  std::size_t n = 0;
  for (const auto& node : spec.nodes) {
    for (const auto& p : layer_parameters(node)) n += numel(p.shape);
  }
  return n;
}

std::size_t receptive_field(const NetSpec& spec, std::size_t node) {
  if (node >= spec.nodes.size()) throw ConfigError("receptive_field: node index out of range");
  std::vector<std::pair<std::size_t, std::size_t>> rf(node + 1);  // (field, jump)
  for (std::size_t i = 0; i <= node; ++i) {
    const auto& n = spec.nodes[i];
    std::size_t field = 1;
    std::size_t jump = 1;
    for (auto j : n.inputs) {
      field = std::max(field, rf[j].first);
      jump = std::max(jump, rf[j].second);
    }
    switch (n.kind) {
      case LayerKind::input:
        break;
      case LayerKind::conv1d:
        field += (n.attrs.kernel - 1) * n.attrs.dilation * jump;
        break;
      case LayerKind::max_pool1d:
        field += (n.attrs.kernel - 1) * jump;
        jump *= n.attrs.stride;
        break;
      case LayerKind::batch_norm:
      case LayerKind::relu:
      case LayerKind::sigmoid:
      case LayerKind::tanh:
      case LayerKind::dropout:
      case LayerKind::add:
      case LayerKind::gated:
        break;
      default:
        throw ConfigError("receptive_field: layer '" + n.name + "' has no temporal axis");
    }
    rf[i] = {field, jump};
  }
  return rf[node].first;
}

std::size_t find_node(const NetSpec& spec, std::string_view name) {
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    if (spec.nodes[i].name == name) return i;
  }
  throw ConfigError("netspec: no layer named '" + std::string(name) + "'");
}

nlohmann::json to_json(const NetSpec& spec) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : spec.nodes) {
    const auto& a = n.attrs;
    nodes.push_back({
        {"name", n.name},
        {"kind", std::string(to_string(n.kind))},
        {"inputs", n.inputs},
        {"attrs",
         {{"in", a.in},
          {"out", a.out},
          {"kernel", a.kernel},
          {"stride", a.stride},
          {"dilation", a.dilation},
          {"groups", a.groups},
          {"pad_left", a.pad_left},
          {"pad_right", a.pad_right},
          {"units", a.units},
          {"bias", a.bias},
          {"return_sequences", a.return_sequences},
          {"trainable", a.trainable},
          {"p", a.p},
          {"momentum", a.momentum},
          {"eps", a.eps},
          {"w0", a.w0},
          {"dj", a.dj},
          {"dt", a.dt},
          {"scales", a.scales}}},
    });
  }
  return {{"architecture", spec.architecture},
          {"head", std::string(to_string(spec.head))},
          {"nodes", nodes}};
}

NetSpec netspec_from_json(const nlohmann::json& doc) {
  try {
    NetSpec spec;
    spec.architecture = doc.at("architecture").get<std::string>();
    spec.head = parse_head(doc.at("head").get<std::string>());
    for (const auto& jn : doc.at("nodes")) {
      LayerNode n;
      n.name = jn.at("name").get<std::string>();
      n.kind = parse_layer_kind(jn.at("kind").get<std::string>());
      n.inputs = jn.at("inputs").get<std::vector<std::size_t>>();
      const auto& ja = jn.at("attrs");
      auto& a = n.attrs;
      auto get = [&](const char* key, auto& field) {
        if (ja.contains(key)) ja.at(key).get_to(field);
      };
      get("in", a.in);
      get("out", a.out);
      get("kernel", a.kernel);
      get("stride", a.stride);
      get("dilation", a.dilation);
      get("groups", a.groups);
      get("pad_left", a.pad_left);
      get("pad_right", a.pad_right);
      get("units", a.units);
      get("bias", a.bias);
      get("return_sequences", a.return_sequences);
      get("trainable", a.trainable);
      get("p", a.p);
      get("momentum", a.momentum);
      get("eps", a.eps);
      get("w0", a.w0);
      get("dj", a.dj);
      get("dt", a.dt);
      get("scales", a.scales);
      spec.nodes.push_back(std::move(n));
    }
    infer_shapes(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("netspec: malformed document: ") + e.what());
  }
}

}  // namespace emgkey::nn
