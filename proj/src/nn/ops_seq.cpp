#include "emgkey/nn/ops.hpp"

#include "eigen_map.hpp"

#include <cmath>

namespace emgkey::nn {
namespace {

using detail::cmap;
using detail::map;

template <class T>
T sigm(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

}  // namespace

template <class T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  const BatchNormState& cfg) {
  const auto& xv = x->value;
  if (xv.rank() < 2) throw ShapeError("batch_norm: expected rank >= 2, got " + to_string(xv.shape()));
  const auto b = xv.dim(0);
  const auto c = xv.dim(1);
  const auto s = b == 0 || c == 0 ? 0 : xv.size() / (b * c);
  if (gamma->value.size() != c || beta->value.size() != c || running_mean.size() != c ||
      running_var.size() != c) {
    throw ShapeError("batch_norm: input " + to_string(xv.shape()) + " does not match " +
                     std::to_string(gamma->value.size()) + " channel parameters");
  }
  const auto count = b * s;
  std::vector<T> mean(c), invstd(c);
  if (training) {
    if (count == 0) throw ShapeError("batch_norm: empty batch");
    for (std::size_t ch = 0; ch < c; ++ch) {
      double sum = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const T* p = xv.data() + (i * c + ch) * s;
        for (std::size_t j = 0; j < s; ++j) sum += p[j];
      }
      const double m = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const T* p = xv.data() + (i * c + ch) * s;
        for (std::size_t j = 0; j < s; ++j) sq += (p[j] - m) * (p[j] - m);
      }
      const double var = sq / static_cast<double>(count);
      mean[ch] = T(m);
      invstd[ch] = T(1.0 / std::sqrt(var + cfg.eps));
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      running_mean[ch] = T((1.0 - cfg.momentum) * running_mean[ch] + cfg.momentum * m);
      running_var[ch] = T((1.0 - cfg.momentum) * running_var[ch] + cfg.momentum * unbiased);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean[ch];
      invstd[ch] = T(1.0 / std::sqrt(static_cast<double>(running_var[ch]) + cfg.eps));
    }
  }
  Tensor<T> xhat(xv.shape());
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const auto base = (i * c + ch) * s;
      const T g = gamma->value[ch];
      const T bt = beta->value[ch];
      for (std::size_t j = 0; j < s; ++j) {
        const T h = (xv[base + j] - mean[ch]) * invstd[ch];
        xhat[base + j] = h;
        y[base + j] = g * h + bt;
      }
    }
  }
  return make_result<T>(
      std::move(y), {x, gamma, beta},
      [xhat = std::move(xhat), invstd = std::move(invstd), training, b, c, s](Node<T>& n) {
        auto& px = *n.parents[0];
        auto& pg = *n.parents[1];
        auto& pb = *n.parents[2];
        std::vector<T> dsum(c, T(0)), dxh(c, T(0));
        for (std::size_t i = 0; i < b; ++i) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            const auto base = (i * c + ch) * s;
            for (std::size_t j = 0; j < s; ++j) {
              dsum[ch] += n.grad[base + j];
              dxh[ch] += n.grad[base + j] * xhat[base + j];
            }
          }
        }
        if (pg.requires_grad) {
          auto& gg = pg.grad_ref();
          for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += dxh[ch];
        }
        if (pb.requires_grad) {
          auto& gb = pb.grad_ref();
          for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += dsum[ch];
        }
        if (!px.requires_grad) return;
        auto& gx = px.grad_ref();
        const T count = T(b * s);
        for (std::size_t i = 0; i < b; ++i) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            const auto base = (i * c + ch) * s;
            const T k = pg.value[ch] * invstd[ch];
            for (std::size_t j = 0; j < s; ++j) {
              const T dy = n.grad[base + j];
              gx[base + j] += training
                                  ? k * (dy - dsum[ch] / count - xhat[base + j] * dxh[ch] / count)
                                  : k * dy;
            }
          }
        }
      });
}

template <class T>
Var<T> lstm(const Var<T>& x, const Var<T>& w_ih, const Var<T>& w_hh, const Var<T>& bias,
            bool return_sequences) {
  const auto& xv = x->value;
  if (xv.rank() != 3 || w_ih->value.rank() != 2 || w_hh->value.rank() != 2 ||
      w_ih->value.dim(0) % 4 != 0) {
    throw ShapeError("lstm: input " + to_string(xv.shape()) + ", w_ih " +
                     to_string(w_ih->value.shape()) + ", w_hh " + to_string(w_hh->value.shape()));
  }
  const auto B = xv.dim(0);
  const auto C = xv.dim(1);
  const auto L = xv.dim(2);
  const auto H = w_ih->value.dim(0) / 4;
  const auto G = 4 * H;
  if (w_ih->value.dim(1) != C || w_hh->value.dim(0) != G || w_hh->value.dim(1) != H ||
      bias->value.size() != G || L == 0) {
    throw ShapeError("lstm: input " + to_string(xv.shape()) + " does not match w_ih " +
                     to_string(w_ih->value.shape()) + ", w_hh " + to_string(w_hh->value.shape()) +
                     ", bias " + to_string(bias->value.shape()));
  }

  // Time-major copy of the input: row t * B + b.
  auto xt = std::make_shared<Buffer<T>>(L * B * C);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const T* src = xv.data() + (b * C + c) * L;
      for (std::size_t t = 0; t < L; ++t) (*xt)[(t * B + b) * C + c] = src[t];
    }
  }
  // Activated gates [L, B, 4H], cell states [L + 1, B, H], hidden states [L + 1, B, H].
  auto gates = std::make_shared<Buffer<T>>(L * B * G);
  auto cells = std::make_shared<Buffer<T>>((L + 1) * B * H, T(0));
  auto hidden = std::make_shared<Buffer<T>>((L + 1) * B * H, T(0));
  auto Gm = map(gates->data(), L * B, G);
  Gm.noalias() = cmap(xt->data(), L * B, C) * cmap(w_ih->value.data(), G, C).transpose();
  for (Eigen::Index r = 0; r < Gm.rows(); ++r) {
    Gm.row(r) += cmap(bias->value.data(), 1, G);
  }
  const auto Whh = cmap(w_hh->value.data(), G, H);
  for (std::size_t t = 0; t < L; ++t) {
    auto Gt = map(gates->data() + t * B * G, B, G);
    Gt.noalias() += cmap(hidden->data() + t * B * H, B, H) * Whh.transpose();
    for (std::size_t b = 0; b < B; ++b) {
      T* gr = gates->data() + (t * B + b) * G;
      const T* cp = cells->data() + (t * B + b) * H;
      T* cn = cells->data() + ((t + 1) * B + b) * H;
      T* hn = hidden->data() + ((t + 1) * B + b) * H;
      for (std::size_t h = 0; h < H; ++h) {
        const T i = sigm(gr[h]);
        const T f = sigm(gr[H + h]);
        const T g = std::tanh(gr[2 * H + h]);
        const T o = sigm(gr[3 * H + h]);
        gr[h] = i;
        gr[H + h] = f;
        gr[2 * H + h] = g;
        gr[3 * H + h] = o;
        cn[h] = f * cp[h] + i * g;
        hn[h] = o * std::tanh(cn[h]);
      }
    }
  }

  Tensor<T> y = return_sequences ? Tensor<T>({B, H, L}) : Tensor<T>({B, H});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      if (return_sequences) {
        for (std::size_t t = 0; t < L; ++t) {
          y[(b * H + h) * L + t] = (*hidden)[((t + 1) * B + b) * H + h];
        }
      } else {
        y[b * H + h] = (*hidden)[(L * B + b) * H + h];
      }
    }
  }

  return make_result<T>(std::move(y), {x, w_ih, w_hh, bias},
                        [xt, gates, cells, hidden, B, C, L, H, G, return_sequences](Node<T>& n) {
    auto& px = *n.parents[0];
    auto& pih = *n.parents[1];
    auto& phh = *n.parents[2];
    auto& pb = *n.parents[3];
    const auto Whh = cmap(phh.value.data(), G, H);
    Buffer<T> dgates(L * B * G);
    Buffer<T> dh_next(B * H, T(0)), dc_next(B * H, T(0)), dh(B * H);
    for (std::size_t t = L; t-- > 0;) {
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t h = 0; h < H; ++h) {
          T g_out = 0;
          if (return_sequences) {
            g_out = n.grad[(b * H + h) * L + t];
          } else if (t == L - 1) {
            g_out = n.grad[b * H + h];
          }
          dh[b * H + h] = g_out + dh_next[b * H + h];
        }
      }
      for (std::size_t b = 0; b < B; ++b) {
        const T* gr = gates->data() + (t * B + b) * G;
        const T* cp = cells->data() + (t * B + b) * H;
        const T* cn = cells->data() + ((t + 1) * B + b) * H;
        T* dg = dgates.data() + (t * B + b) * G;
        for (std::size_t h = 0; h < H; ++h) {
          const T i = gr[h], f = gr[H + h], g = gr[2 * H + h], o = gr[3 * H + h];
          const T tc = std::tanh(cn[h]);
          const T d_h = dh[b * H + h];
          const T dc = d_h * o * (T(1) - tc * tc) + dc_next[b * H + h];
          dg[h] = dc * g * i * (T(1) - i);
          dg[H + h] = dc * cp[h] * f * (T(1) - f);
          dg[2 * H + h] = dc * i * (T(1) - g * g);
          dg[3 * H + h] = d_h * tc * o * (T(1) - o);
          dc_next[b * H + h] = dc * f;
        }
      }
      const auto dGt = cmap(dgates.data() + t * B * G, B, G);
      if (phh.requires_grad) {
        map(phh.grad_ref().data(), G, H).noalias() +=
            dGt.transpose() * cmap(hidden->data() + t * B * H, B, H);
      }
      map(dh_next.data(), B, H).noalias() = dGt * Whh;
    }
    const auto dG = cmap(dgates.data(), L * B, G);
    if (pih.requires_grad) {
      map(pih.grad_ref().data(), G, C).noalias() += dG.transpose() * cmap(xt->data(), L * B, C);
    }
    if (pb.requires_grad) {
      map(pb.grad_ref().data(), 1, G) += dG.colwise().sum();
    }
    if (px.requires_grad) {
      Buffer<T> dxt(L * B * C);
      map(dxt.data(), L * B, C).noalias() = dG * cmap(pih.value.data(), G, C);
      auto& gx = px.grad_ref();
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
          T* dst = gx.data() + (b * C + c) * L;
          for (std::size_t t = 0; t < L; ++t) dst[t] += dxt[(t * B + b) * C + c];
        }
      }
    }
  });
}

#define EMGKEY_INSTANTIATE(T)                                                                  \
  template Var<T> batch_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&, Tensor<T>&,        \
                                Tensor<T>&, bool, const BatchNormState&);                      \
  template Var<T> lstm<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&, bool);

EMGKEY_INSTANTIATE(float)
EMGKEY_INSTANTIATE(double)

#undef EMGKEY_INSTANTIATE

}  // namespace emgkey::nn
