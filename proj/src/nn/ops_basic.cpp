#include "emgkey/nn/ops.hpp"

#include "eigen_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace emgkey::nn {
namespace {

template <class T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()) + " differ");
  }
}

template <class T>
void require_rank(const char* op, const Tensor<T>& x, std::size_t rank) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(x.shape()));
  }
}

template <class T>
T sigmoid_scalar(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <class T, class F, class D>
Var<T> unary(const Var<T>& x, F f, D dfdy_from_xy) {
  Tensor<T> y(x->value.shape());
  const auto& xv = x->value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return make_result<T>(std::move(y), {x}, [dfdy_from_xy](Node<T>& n) {
    auto& p = *n.parents[0];
    auto& g = p.grad_ref();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += n.grad[i] * dfdy_from_xy(p.value[i], n.value[i]);
    }
  });
}

}  // namespace

template <class T>
Var<T> relu(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T xv, T) { return xv > T(0) ? T(1) : T(0); });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  return unary<T>(x, sigmoid_scalar<T>, [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var<T> tanh(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Var<T> softmax(const Var<T>& x) {
  require_rank("softmax", x->value, 2);
  const auto rows = x->value.dim(0);
  const auto k = x->value.dim(1);
  Tensor<T> y(x->value.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = x->value.data() + r * k;
    T* out = y.data() + r * k;
    const T mx = *std::max_element(in, in + k);
    T sum = 0;
    for (std::size_t j = 0; j < k; ++j) sum += (out[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
  }
  return make_result<T>(std::move(y), {x}, [rows, k](Node<T>& n) {
    auto& g = n.parents[0]->grad_ref();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* yv = n.value.data() + r * k;
      const T* dy = n.grad.data() + r * k;
      T dot = 0;
      for (std::size_t j = 0; j < k; ++j) dot += dy[j] * yv[j];
      for (std::size_t j = 0; j < k; ++j) g[r * k + j] += yv[j] * (dy[j] - dot);
    }
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a->value, b->value);
  Tensor<T> y(a->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] * b->value[i];
  return make_result<T>(std::move(y), {a, b}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pa.value[i];
    }
  });
}

template <class T>
Var<T> add(std::span<const Var<T>> xs) {
  if (xs.empty()) throw ShapeError("add: no inputs");
  Tensor<T> y = xs[0]->value;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    require_same_shape("add", xs[0]->value, xs[k]->value);
    const auto& v = xs[k]->value;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += v[i];
  }
  return make_result<T>(std::move(y), std::vector<Var<T>>(xs.begin(), xs.end()), [](Node<T>& n) {
    for (auto& p : n.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  const Var<T> xs[] = {a, b};
  return add<T>(std::span<const Var<T>>(xs));
}

template <class T>
Var<T> gated_activation(const Var<T>& filter, const Var<T>& gate) {
  require_same_shape("gated_activation", filter->value, gate->value);
  return mul<T>(tanh<T>(filter), sigmoid<T>(gate));
}

template <class T>
Var<T> dropout(const Var<T>& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const T scale = T(1.0 / (1.0 - p));
  std::vector<T> mask(x->value.size());
  for (auto& m : mask) m = rng.uniform() >= p ? scale : T(0);
  Tensor<T> y(x->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x->value[i] * mask[i];
  return make_result<T>(std::move(y), {x}, [mask = std::move(mask)](Node<T>& n) {
    auto& g = n.parents[0]->grad_ref();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * mask[i];
  });
}

template <class T>
Var<T> flatten(const Var<T>& x) {
  if (x->value.rank() < 2) throw ShapeError("flatten: expected rank >= 2, got " + to_string(x->value.shape()));
  Tensor<T> y = x->value;
  const auto b = y.dim(0);
  y.reshape({b, y.size() / std::max<std::size_t>(b, 1)});
  return make_result<T>(std::move(y), {x}, [](Node<T>& n) {
    auto& g = n.parents[0]->grad_ref();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
  const auto& xv = x->value;
  if (xv.rank() < 3) throw ShapeError("global_avg_pool: expected rank >= 3, got " + to_string(xv.shape()));
  const auto b = xv.dim(0);
  const auto c = xv.dim(1);
  const auto s = xv.size() / (b * c);
  Tensor<T> y({b, c});
  for (std::size_t i = 0; i < b * c; ++i) {
    T sum = 0;
    for (std::size_t j = 0; j < s; ++j) sum += xv[i * s + j];
    y[i] = sum / T(s);
  }
  return make_result<T>(std::move(y), {x}, [s](Node<T>& n) {
    auto& g = n.parents[0]->grad_ref();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const T d = n.grad[i] / T(s);
      for (std::size_t j = 0; j < s; ++j) g[i * s + j] += d;
    }
  });
}

template <class T>
Var<T> max_pool1d(const Var<T>& x, std::size_t kernel, std::size_t stride) {
  require_rank("max_pool1d", x->value, 3);
  const auto b = x->value.dim(0);
  const auto c = x->value.dim(1);
  const auto l = x->value.dim(2);
  if (kernel == 0 || stride == 0 || kernel > l) {
    throw ShapeError("max_pool1d: kernel " + std::to_string(kernel) + " does not fit " +
                     to_string(x->value.shape()));
  }
  const auto lo = (l - kernel) / stride + 1;
  Tensor<T> y({b, c, lo});
  std::vector<std::size_t> arg(y.size());
  for (std::size_t r = 0; r < b * c; ++r) {
    const T* in = x->value.data() + r * l;
    for (std::size_t t = 0; t < lo; ++t) {
      std::size_t best = t * stride;
      for (std::size_t k = 1; k < kernel; ++k) {
        if (in[t * stride + k] > in[best]) best = t * stride + k;
      }
      y[r * lo + t] = in[best];
      arg[r * lo + t] = r * l + best;
    }
  }
  return make_result<T>(std::move(y), {x}, [arg = std::move(arg)](Node<T>& n) {
    auto& g = n.parents[0]->grad_ref();
    for (std::size_t i = 0; i < arg.size(); ++i) g[arg[i]] += n.grad[i];
  });
}

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& bias) {
  using namespace detail;
  require_rank("linear", x->value, 2);
  require_rank("linear", w->value, 2);
  const auto b = x->value.dim(0);
  const auto in = x->value.dim(1);
  const auto out = w->value.dim(0);
  if (w->value.dim(1) != in) {
    throw ShapeError("linear: input " + to_string(x->value.shape()) + " does not match weight " +
                     to_string(w->value.shape()));
  }
  if (bias && bias->value.size() != out) {
    throw ShapeError("linear: bias " + to_string(bias->value.shape()) + " does not match weight " +
                     to_string(w->value.shape()));
  }
  Tensor<T> y({b, out});
  auto Y = map(y.data(), b, out);
  Y.noalias() = cmap(x->value.data(), b, in) * cmap(w->value.data(), out, in).transpose();
  if (bias) {
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t o = 0; o < out; ++o) y[r * out + o] += bias->value[o];
    }
  }
  std::vector<Var<T>> parents{x, w};
  if (bias) parents.push_back(bias);
  return make_result<T>(std::move(y), std::move(parents), [b, in, out](Node<T>& n) {
    auto dY = cmap(n.grad.data(), b, out);
    auto& px = *n.parents[0];
    auto& pw = *n.parents[1];
    if (px.requires_grad) {
      map(px.grad_ref().data(), b, in).noalias() += dY * cmap(pw.value.data(), out, in);
    }
    if (pw.requires_grad) {
      map(pw.grad_ref().data(), out, in).noalias() += dY.transpose() * cmap(px.value.data(), b, in);
    }
    if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
      auto& gb = n.parents[2]->grad_ref();
      for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t o = 0; o < out; ++o) gb[o] += n.grad[r * out + o];
      }
    }
  });
}

template <class T>
Var<T> project(const Var<T>& x, const Tensor<T>& r) {
  require_same_shape("project", x->value, r);
  T s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += x->value[i] * r[i];
  return make_result<T>(Tensor<T>({1}, std::vector<T>{s}), {x}, [r](Node<T>& n) {
    auto& g = n.parents[0]->grad_ref();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0] * r[i];
  });
}

template <class T>
Var<T> bce_with_logits(const Var<T>& logits, std::span<const T> targets, std::span<const T> weights) {
  const auto& z = logits->value;
  const bool ok_shape = z.rank() == 1 || (z.rank() == 2 && z.dim(1) == 1);
  if (!ok_shape || targets.size() != z.size() || (!weights.empty() && weights.size() != z.size())) {
    throw ShapeError("bce_with_logits: logits " + to_string(z.shape()) + " with " +
                     std::to_string(targets.size()) + " targets");
  }
  const auto b = z.size();
  T wsum = 0;
  T loss = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const T w = weights.empty() ? T(1) : weights[i];
    const T v = z[i];
    loss += w * (std::max(v, T(0)) - v * targets[i] + std::log1p(std::exp(-std::abs(v))));
    wsum += w;
  }
  if (!(wsum > T(0))) throw NumericError("bce_with_logits: weights sum to zero");
  std::vector<T> coef(b);
  for (std::size_t i = 0; i < b; ++i) {
    const T w = weights.empty() ? T(1) : weights[i];
    coef[i] = w * (sigmoid_scalar(z[i]) - targets[i]) / wsum;
  }
  return make_result<T>(Tensor<T>({1}, std::vector<T>{loss / wsum}), {logits},
                        [coef = std::move(coef)](Node<T>& n) {
                          auto& g = n.parents[0]->grad_ref();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0] * coef[i];
                        });
}

template <class T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels,
                     std::span<const T> class_weights) {
  const auto& z = logits->value;
  if (z.rank() != 2 || labels.size() != z.dim(0)) {
    throw ShapeError("cross_entropy: logits " + to_string(z.shape()) + " with " +
                     std::to_string(labels.size()) + " labels");
  }
  const auto b = z.dim(0);
  const auto k = z.dim(1);
  if (!class_weights.empty() && class_weights.size() != k) {
    throw ShapeError("cross_entropy: " + std::to_string(class_weights.size()) +
                     " class weights for " + std::to_string(k) + " classes");
  }
  std::vector<T> dz(b * k);
  T loss = 0;
  T wsum = 0;
  for (std::size_t r = 0; r < b; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw ShapeError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    const T w = class_weights.empty() ? T(1) : class_weights[static_cast<std::size_t>(y)];
    const T* in = z.data() + r * k;
    const T mx = *std::max_element(in, in + k);
    T sum = 0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(in[j] - mx);
    const T lse = mx + std::log(sum);
    loss += w * (lse - in[y]);
    wsum += w;
    for (std::size_t j = 0; j < k; ++j) dz[r * k + j] = w * std::exp(in[j] - lse);
    dz[r * k + static_cast<std::size_t>(y)] -= w;
  }
  if (!(wsum > T(0))) throw NumericError("cross_entropy: weights sum to zero");
  for (auto& d : dz) d /= wsum;
  return make_result<T>(Tensor<T>({1}, std::vector<T>{loss / wsum}), {logits},
                        [dz = std::move(dz)](Node<T>& n) {
                          auto& g = n.parents[0]->grad_ref();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0] * dz[i];
                        });
}

#define EMGKEY_INSTANTIATE(T)                                                                  \
  template Var<T> relu<T>(const Var<T>&);                                                      \
  template Var<T> sigmoid<T>(const Var<T>&);                                                   \
  template Var<T> tanh<T>(const Var<T>&);                                                      \
  template Var<T> softmax<T>(const Var<T>&);                                                   \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                       \
  template Var<T> add<T>(std::span<const Var<T>>);                                             \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                       \
  template Var<T> gated_activation<T>(const Var<T>&, const Var<T>&);                          \
  template Var<T> dropout<T>(const Var<T>&, double, bool, Rng&);                               \
  template Var<T> flatten<T>(const Var<T>&);                                                   \
  template Var<T> global_avg_pool<T>(const Var<T>&);                                           \
  template Var<T> max_pool1d<T>(const Var<T>&, std::size_t, std::size_t);                      \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                     \
  template Var<T> project<T>(const Var<T>&, const Tensor<T>&);                                 \
  template Var<T> bce_with_logits<T>(const Var<T>&, std::span<const T>, std::span<const T>);   \
  template Var<T> cross_entropy<T>(const Var<T>&, std::span<const int>, std::span<const T>);

EMGKEY_INSTANTIATE(float)
EMGKEY_INSTANTIATE(double)

#undef EMGKEY_INSTANTIATE

}  // namespace emgkey::nn
