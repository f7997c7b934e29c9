#include "emgkey/nn/network.hpp"

#include "emgkey/arch/cwt.hpp"
#include "emgkey/core/error.hpp"

#include <cmath>
#include <map>

namespace emgkey::nn {

template <class T>
struct Network<T>::Layer {
  std::vector<Var<T>> params;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  std::unique_ptr<SpectralOperator<T>> spectral;
};

template <class T>
Network<T>::Network(NetSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  shapes_ = infer_shapes(spec_);
  for (std::size_t i = 0; i < spec_.nodes.size(); ++i) {
    const auto& node = spec_.nodes[i];
    auto layer = std::make_unique<Layer>();
    const auto specs = layer_parameters(node);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      const auto& ps = specs[k];
      Tensor<T> v(ps.shape);
      Rng rng = Rng::derive(seed, i * 16 + k);
      double bound = 0.0;
      switch (ps.init) {
        case Init::he_uniform: bound = std::sqrt(6.0 / static_cast<double>(ps.fan_in)); break;
        case Init::fan_in_uniform: bound = 1.0 / std::sqrt(static_cast<double>(ps.fan_in)); break;
        case Init::lstm_uniform: bound = 1.0 / std::sqrt(static_cast<double>(ps.fan_in)); break;
        case Init::zeros: break;
        case Init::ones: v.fill(T(1)); break;
      }
      if (bound > 0.0) {
        for (auto& x : v.vec()) x = static_cast<T>(rng.uniform(-bound, bound));
      }
      auto var = parameter(std::move(v));
      var->requires_grad = node.attrs.trainable;
      layer->params.push_back(std::move(var));
    }
    if (node.kind == LayerKind::batch_norm) {
      layer->running_mean = Tensor<T>({node.attrs.in}, T(0));
      layer->running_var = Tensor<T>({node.attrs.in}, T(1));
    }
    if (node.kind == LayerKind::cwt) {
      arch::CwtConfig cfg{node.attrs.w0, node.attrs.dj, node.attrs.dt, node.attrs.scales};
      layer->spectral = std::make_unique<SpectralOperator<T>>(
          arch::cwt_operator<T>(shapes_[node.inputs[0]][1], cfg));
    }
    layers_.push_back(std::move(layer));
  }
}

template <class T>
Network<T>::~Network() = default;
template <class T>
Network<T>::Network(Network&&) noexcept = default;
template <class T>
Network<T>& Network<T>::operator=(Network&&) noexcept = default;

template <class T>
std::vector<Var<T>> Network<T>::forward_all(const Var<T>& input, bool training) {
  const auto& want = shapes_[0];
  const auto& got = input->value.shape();
  if (got.size() != 3 || got[1] != want[0] || got[2] != want[1] || got[0] == 0) {
    throw ShapeError("network input " + to_string(got) + " does not match [B, " +
                     std::to_string(want[0]) + ", " + std::to_string(want[1]) + "]");
  }
  std::vector<Var<T>> acts(spec_.nodes.size());
  acts[0] = input;
  for (std::size_t i = 1; i < spec_.nodes.size(); ++i) {
    const auto& node = spec_.nodes[i];
    const auto& a = node.attrs;
    auto& L = *layers_[i];
    const auto& x = acts[node.inputs[0]];
    const Var<T> none;
    const auto param = [&](std::size_t k) -> const Var<T>& {
      return k < L.params.size() ? L.params[k] : none;
    };
    switch (node.kind) {
      case LayerKind::input:
        break;
      case LayerKind::batch_norm:
        acts[i] = batch_norm<T>(x, L.params[0], L.params[1], L.running_mean, L.running_var,
                                training, {a.momentum, a.eps});
        break;
      case LayerKind::conv1d:
        acts[i] = conv1d<T>(x, L.params[0], param(1), {a.groups, a.dilation, a.pad_left, a.pad_right});
        break;
      case LayerKind::conv2d:
        acts[i] = conv2d<T>(x, L.params[0], param(1), {a.stride, a.pad_left});
        break;
      case LayerKind::relu: acts[i] = relu<T>(x); break;
      case LayerKind::sigmoid: acts[i] = sigmoid<T>(x); break;
      case LayerKind::tanh: acts[i] = nn::tanh<T>(x); break;
      case LayerKind::softmax: acts[i] = softmax<T>(x); break;
      case LayerKind::max_pool1d: acts[i] = max_pool1d<T>(x, a.kernel, a.stride); break;
      case LayerKind::dropout: acts[i] = dropout<T>(x, a.p, training, dropout_rng_); break;
      case LayerKind::lstm:
        acts[i] = lstm<T>(x, L.params[0], L.params[1], L.params[2], a.return_sequences);
        break;
      case LayerKind::add: {
        std::vector<Var<T>> xs;
        for (auto j : node.inputs) xs.push_back(acts[j]);
        acts[i] = add<T>(std::span<const Var<T>>(xs));
        break;
      }
      case LayerKind::gated:
        acts[i] = gated_activation<T>(x, acts[node.inputs[1]]);
        break;
      case LayerKind::global_avg_pool: acts[i] = global_avg_pool<T>(x); break;
      case LayerKind::flatten: acts[i] = flatten<T>(x); break;
      case LayerKind::linear: acts[i] = linear<T>(x, L.params[0], param(1)); break;
      case LayerKind::cwt: acts[i] = spectral_power<T>(x, *L.spectral); break;
    }
  }
  return acts;
}

template <class T>
Var<T> Network<T>::forward(const Var<T>& input, bool training) {
  return forward_all(input, training).back();
}

template <class T>
std::vector<std::pair<std::string, Var<T>>> Network<T>::parameters() const {
  std::vector<std::pair<std::string, Var<T>>> out;
  for (std::size_t i = 0; i < spec_.nodes.size(); ++i) {
    const auto specs = layer_parameters(spec_.nodes[i]);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      out.emplace_back(spec_.nodes[i].name + "." + specs[k].suffix, layers_[i]->params[k]);
    }
  }
  return out;
}

template <class T>
std::vector<Var<T>> Network<T>::trainable() const {
  std::vector<Var<T>> out;
  for (const auto& l : layers_) {
    for (const auto& p : l->params) {
      if (p->requires_grad) out.push_back(p);
    }
  }
  return out;
}

template <class T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    for (const auto& p : l->params) n += p->value.size();
  }
  return n;
}

template <class T>
std::vector<NamedTensor<T>> Network<T>::state() const {
  std::vector<NamedTensor<T>> out;
  for (auto& [name, v] : parameters()) out.push_back({name, v->value});
  for (std::size_t i = 0; i < spec_.nodes.size(); ++i) {
    if (spec_.nodes[i].kind != LayerKind::batch_norm) continue;
    out.push_back({spec_.nodes[i].name + ".running_mean", layers_[i]->running_mean});
    out.push_back({spec_.nodes[i].name + ".running_var", layers_[i]->running_var});
  }
  return out;
}

template <class T>
void Network<T>::load_state(const std::vector<NamedTensor<T>>& state) {
  std::map<std::string, Tensor<T>*> slots;
  for (auto& [name, v] : parameters()) slots[name] = &v->value;
  for (std::size_t i = 0; i < spec_.nodes.size(); ++i) {
    if (spec_.nodes[i].kind != LayerKind::batch_norm) continue;
    slots[spec_.nodes[i].name + ".running_mean"] = &layers_[i]->running_mean;
    slots[spec_.nodes[i].name + ".running_var"] = &layers_[i]->running_var;
  }
  if (state.size() != slots.size()) {
    throw ConfigError("load_state: " + std::to_string(state.size()) + " tensors for a network with " +
                      std::to_string(slots.size()));
  }
  for (const auto& t : state) {
    auto it = slots.find(t.name);
    if (it == slots.end()) throw ConfigError("load_state: unknown tensor '" + t.name + "'");
    if (it->second->shape() != t.value.shape()) {
      throw ConfigError("load_state: tensor '" + t.name + "' has shape " + to_string(t.value.shape()) +
                        ", expected " + to_string(it->second->shape()));
    }
    *it->second = t.value;
  }
}

template <class T>
void Network<T>::set_dropout_seed(std::uint64_t seed) {
  dropout_rng_ = Rng::derive(seed, 0xD50);
}

template <class T>
void Network<T>::zero_grad() {
  for (const auto& l : layers_) {
    for (const auto& p : l->params) p->grad = Tensor<T>();
  }
}

template class Network<float>;
template class Network<double>;

}  // namespace emgkey::nn
