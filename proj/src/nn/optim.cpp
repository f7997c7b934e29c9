#include "emgkey/nn/optim.hpp"

#include "emgkey/core/error.hpp"

#include <cmath>
#include <string>

namespace emgkey::nn {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "rmsprop";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected adam or rmsprop)");
}

void validate(const OptimizerConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("optimizer: learning_rate must be positive");
  if (!(cfg.weight_decay >= 0.0)) throw ConfigError("optimizer: weight_decay must be non-negative");
  if (cfg.batch_size == 0) throw ConfigError("optimizer: batch_size must be at least 1");
  auto unit = [](double v) { return v >= 0.0 && v < 1.0; };
  if (!unit(cfg.beta1) || !unit(cfg.beta2) || !unit(cfg.alpha)) {
    throw ConfigError("optimizer: beta1, beta2 and alpha must lie in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw ConfigError("optimizer: eps must be positive");
}

template <class T>
Optimizer<T>::Optimizer(const OptimizerConfig& cfg, std::vector<Var<T>> params)
    : cfg_(cfg), params_(std::move(params)) {
  validate(cfg_);
  for (const auto& p : params_) {
    m_.emplace_back(p->value.size(), T(0));
    v_.emplace_back(p->value.size(), T(0));
  }
}

template <class T>
void Optimizer<T>::step() {
  ++t_;
  const double lr = cfg_.learning_rate;
  const T shrink = T(1.0 - lr * cfg_.weight_decay);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& w = params_[k]->value;
    const auto& g = params_[k]->grad;
    const bool has_grad = g.size() == w.size();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const T gi = has_grad ? g[i] : T(0);
      T update = 0;
      if (cfg_.kind == OptimizerKind::adam) {
        m[i] = T(cfg_.beta1) * m[i] + T(1.0 - cfg_.beta1) * gi;
        v[i] = T(cfg_.beta2) * v[i] + T(1.0 - cfg_.beta2) * gi * gi;
        const T mhat = m[i] / T(bc1);
        const T vhat = v[i] / T(bc2);
        update = T(lr) * mhat / (std::sqrt(vhat) + T(cfg_.eps));
      } else {
        v[i] = T(cfg_.alpha) * v[i] + T(1.0 - cfg_.alpha) * gi * gi;
        update = T(lr) * gi / (std::sqrt(v[i]) + T(cfg_.eps));
      }
      w[i] = w[i] * shrink - update;
    }
  }
}

template <class T>
void Optimizer<T>::zero_grad() {
  for (auto& p : params_) p->grad = Tensor<T>();
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace emgkey::nn
