#include "emgkey/nn/ops.hpp"

#include "eigen_map.hpp"

#include <algorithm>

namespace emgkey::nn {
namespace {

using detail::cmap;
using detail::map;

struct Conv1dGeometry {
  std::size_t b, cin, l, cout, cig, cog, k, lo, groups, dil, pl;
};

template <class T>
Conv1dGeometry conv1d_geometry(const Tensor<T>& x, const Tensor<T>& w, const Var<T>& bias,
                               const Conv1dParams& p) {
  auto fail = [&](const std::string& why) {
    throw ShapeError("conv1d: " + why + " (input " + to_string(x.shape()) + ", weight " +
                     to_string(w.shape()) + ")");
  };
  if (x.rank() != 3 || w.rank() != 3) fail("expected rank-3 input and weight");
  if (p.groups == 0 || p.dilation == 0) fail("groups and dilation must be positive");
  Conv1dGeometry g{};
  g.b = x.dim(0);
  g.cin = x.dim(1);
  g.l = x.dim(2);
  g.cout = w.dim(0);
  g.cig = w.dim(1);
  g.k = w.dim(2);
  g.groups = p.groups;
  g.dil = p.dilation;
  g.pl = p.pad_left;
  if (g.cin % g.groups != 0 || g.cout % g.groups != 0) fail("channels not divisible by groups");
  if (g.cig * g.groups != g.cin) fail("weight input channels do not match input / groups");
  if (g.k == 0) fail("empty kernel");
  const auto padded = g.l + p.pad_left + p.pad_right;
  const auto span = g.dil * (g.k - 1) + 1;
  if (padded < span) fail("kernel span exceeds padded length");
  g.lo = padded - span + 1;
  g.cog = g.cout / g.groups;
  if (bias && bias->value.size() != g.cout) fail("bias size does not match output channels");
  return g;
}

template <class T>
void im2col_1d(const T* x, const Conv1dGeometry& g, std::size_t group, T* col) {
  const auto cols = g.b * g.lo;
  for (std::size_t ci = 0; ci < g.cig; ++ci) {
    for (std::size_t k = 0; k < g.k; ++k) {
      T* row = col + (ci * g.k + k) * cols;
      const auto off = static_cast<std::ptrdiff_t>(k * g.dil) - static_cast<std::ptrdiff_t>(g.pl);
      for (std::size_t b = 0; b < g.b; ++b) {
        const T* src = x + (b * g.cin + group * g.cig + ci) * g.l;
        T* dst = row + b * g.lo;
        for (std::size_t t = 0; t < g.lo; ++t) {
          const auto s = static_cast<std::ptrdiff_t>(t) + off;
          dst[t] = (s >= 0 && s < static_cast<std::ptrdiff_t>(g.l)) ? src[s] : T(0);
        }
      }
    }
  }
}

template <class T>
void col2im_1d(const T* col, const Conv1dGeometry& g, std::size_t group, T* dx) {
  const auto cols = g.b * g.lo;
  for (std::size_t ci = 0; ci < g.cig; ++ci) {
    for (std::size_t k = 0; k < g.k; ++k) {
      const T* row = col + (ci * g.k + k) * cols;
      const auto off = static_cast<std::ptrdiff_t>(k * g.dil) - static_cast<std::ptrdiff_t>(g.pl);
      for (std::size_t b = 0; b < g.b; ++b) {
        T* dst = dx + (b * g.cin + group * g.cig + ci) * g.l;
        const T* src = row + b * g.lo;
        for (std::size_t t = 0; t < g.lo; ++t) {
          const auto s = static_cast<std::ptrdiff_t>(t) + off;
          if (s >= 0 && s < static_cast<std::ptrdiff_t>(g.l)) dst[s] += src[t];
        }
      }
    }
  }
}

struct Conv2dGeometry {
  std::size_t b, cin, h, w, cout, kh, kw, ho, wo, stride, pad;
};

template <class T>
void im2col_2d(const T* x, const Conv2dGeometry& g, T* col) {
  const auto cols = g.ho * g.wo;
  for (std::size_t c = 0; c < g.cin; ++c) {
    const T* plane = x + c * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* row = col + ((c * g.kh + i) * g.kw + j) * cols;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.stride + i) -
                          static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oh * g.wo;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(ih) * g.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.stride + j) -
                            static_cast<std::ptrdiff_t>(g.pad);
            dst[ow] = (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.w)) ? src[iw] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im_2d(const T* col, const Conv2dGeometry& g, T* dx) {
  const auto cols = g.ho * g.wo;
  for (std::size_t c = 0; c < g.cin; ++c) {
    T* plane = dx + c * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* row = col + ((c * g.kh + i) * g.kw + j) * cols;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.stride + i) -
                          static_cast<std::ptrdiff_t>(g.pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = plane + static_cast<std::size_t>(ih) * g.w;
          const T* src = row + oh * g.wo;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.stride + j) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.w)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
Var<T> conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& bias, const Conv1dParams& p) {
  const auto g = conv1d_geometry(x->value, w->value, bias, p);
  const auto rows = g.cig * g.k;
  const auto cols = g.b * g.lo;
  Tensor<T> y({g.b, g.cout, g.lo});
  Buffer<T> col(rows * cols);
  Buffer<T> out(g.cog * cols);
  for (std::size_t gi = 0; gi < g.groups; ++gi) {
    im2col_1d(x->value.data(), g, gi, col.data());
    map(out.data(), g.cog, cols).noalias() =
        cmap(w->value.data() + gi * g.cog * rows, g.cog, rows) * cmap(col.data(), rows, cols);
    for (std::size_t o = 0; o < g.cog; ++o) {
      const auto oc = gi * g.cog + o;
      const T bv = bias ? bias->value[oc] : T(0);
      for (std::size_t b = 0; b < g.b; ++b) {
        const T* src = out.data() + o * cols + b * g.lo;
        T* dst = y.data() + (b * g.cout + oc) * g.lo;
        for (std::size_t t = 0; t < g.lo; ++t) dst[t] = src[t] + bv;
      }
    }
  }
  std::vector<Var<T>> parents{x, w};
  if (bias) parents.push_back(bias);
  return make_result<T>(std::move(y), std::move(parents), [g, rows, cols](Node<T>& n) {
    auto& px = *n.parents[0];
    auto& pw = *n.parents[1];
    Buffer<T> col(rows * cols);
    Buffer<T> dout(g.cog * cols);
    for (std::size_t gi = 0; gi < g.groups; ++gi) {
      for (std::size_t o = 0; o < g.cog; ++o) {
        const auto oc = gi * g.cog + o;
        for (std::size_t b = 0; b < g.b; ++b) {
          const T* src = n.grad.data() + (b * g.cout + oc) * g.lo;
          std::copy(src, src + g.lo, dout.data() + o * cols + b * g.lo);
        }
      }
      auto dO = cmap(dout.data(), g.cog, cols);
      if (pw.requires_grad) {
        im2col_1d(px.value.data(), g, gi, col.data());
        map(pw.grad_ref().data() + gi * g.cog * rows, g.cog, rows).noalias() +=
            dO * cmap(col.data(), rows, cols).transpose();
      }
      if (px.requires_grad) {
        map(col.data(), rows, cols).noalias() =
            cmap(pw.value.data() + gi * g.cog * rows, g.cog, rows).transpose() * dO;
        col2im_1d(col.data(), g, gi, px.grad_ref().data());
      }
    }
    if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
      auto& gb = n.parents[2]->grad_ref();
      for (std::size_t b = 0; b < g.b; ++b) {
        for (std::size_t oc = 0; oc < g.cout; ++oc) {
          const T* src = n.grad.data() + (b * g.cout + oc) * g.lo;
          T s = 0;
          for (std::size_t t = 0; t < g.lo; ++t) s += src[t];
          gb[oc] += s;
        }
      }
    }
  });
}

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& bias, const Conv2dParams& p) {
  const auto& xv = x->value;
  const auto& wv = w->value;
  auto fail = [&](const std::string& why) {
    throw ShapeError("conv2d: " + why + " (input " + to_string(xv.shape()) + ", weight " +
                     to_string(wv.shape()) + ")");
  };
  if (xv.rank() != 4 || wv.rank() != 4) fail("expected rank-4 input and weight");
  if (p.stride == 0) fail("stride must be positive");
  Conv2dGeometry g{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0), wv.dim(2), wv.dim(3),
                   0, 0, p.stride, p.pad};
  if (wv.dim(1) != g.cin) fail("weight input channels do not match input");
  if (g.h + 2 * g.pad < g.kh || g.w + 2 * g.pad < g.kw) fail("kernel exceeds padded input");
  if (bias && bias->value.size() != g.cout) fail("bias size does not match output channels");
  g.ho = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.wo = (g.w + 2 * g.pad - g.kw) / g.stride + 1;
  const auto rows = g.cin * g.kh * g.kw;
  const auto cols = g.ho * g.wo;
  Tensor<T> y({g.b, g.cout, g.ho, g.wo});
  Buffer<T> col(rows * cols);
  const auto W = cmap(wv.data(), g.cout, rows);
  for (std::size_t b = 0; b < g.b; ++b) {
    im2col_2d(xv.data() + b * g.cin * g.h * g.w, g, col.data());
    auto Y = map(y.data() + b * g.cout * cols, g.cout, cols);
    Y.noalias() = W * cmap(col.data(), rows, cols);
    if (bias) {
      for (std::size_t o = 0; o < g.cout; ++o) Y.row(static_cast<Eigen::Index>(o)).array() += bias->value[o];
    }
  }
  std::vector<Var<T>> parents{x, w};
  if (bias) parents.push_back(bias);
  return make_result<T>(std::move(y), std::move(parents), [g, rows, cols](Node<T>& n) {
    auto& px = *n.parents[0];
    auto& pw = *n.parents[1];
    Buffer<T> col(rows * cols);
    const auto in_size = g.cin * g.h * g.w;
    for (std::size_t b = 0; b < g.b; ++b) {
      auto dY = cmap(n.grad.data() + b * g.cout * cols, g.cout, cols);
      if (pw.requires_grad) {
        im2col_2d(px.value.data() + b * in_size, g, col.data());
        map(pw.grad_ref().data(), g.cout, rows).noalias() +=
            dY * cmap(col.data(), rows, cols).transpose();
      }
      if (px.requires_grad) {
        map(col.data(), rows, cols).noalias() =
            cmap(pw.value.data(), g.cout, rows).transpose() * dY;
        col2im_2d(col.data(), g, px.grad_ref().data() + b * in_size);
      }
    }
    if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
      auto& gb = n.parents[2]->grad_ref();
      for (std::size_t b = 0; b < g.b; ++b) {
        for (std::size_t o = 0; o < g.cout; ++o) {
          const T* src = n.grad.data() + (b * g.cout + o) * cols;
          T s = 0;
          for (std::size_t i = 0; i < cols; ++i) s += src[i];
          gb[o] += s;
        }
      }
    }
  });
}

template <class T>
Var<T> spectral_power(const Var<T>& x, const SpectralOperator<T>& op) {
  const auto& xv = x->value;
  if (xv.rank() != 3 || xv.dim(2) != op.length) {
    throw ShapeError("cwt: input " + to_string(xv.shape()) + " does not match transform length " +
                     std::to_string(op.length));
  }
  const auto rows = xv.dim(0) * xv.dim(1);
  const auto sl = op.scales * op.length;
  const auto X = cmap(xv.data(), rows, op.length);
  auto re = std::make_shared<Buffer<T>>(rows * sl);
  auto im = std::make_shared<Buffer<T>>(rows * sl);
  map(re->data(), rows, sl).noalias() = X * cmap(op.real.data(), sl, op.length).transpose();
  map(im->data(), rows, sl).noalias() = X * cmap(op.imag.data(), sl, op.length).transpose();
  Tensor<T> y({xv.dim(0), xv.dim(1), op.scales, op.length});
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (*re)[i] * (*re)[i] + (*im)[i] * (*im)[i];
  if (!grad_enabled() || !x->requires_grad) return make_result<T>(std::move(y), {x}, {});
  return make_result<T>(std::move(y), {x}, [re, im, &op, rows, sl](Node<T>& n) {
    Buffer<T> a(rows * sl);
    Buffer<T> b(rows * sl);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = T(2) * (*re)[i] * n.grad[i];
      b[i] = T(2) * (*im)[i] * n.grad[i];
    }
    auto dX = map(n.parents[0]->grad_ref().data(), rows, op.length);
    dX.noalias() += cmap(a.data(), rows, sl) * cmap(op.real.data(), sl, op.length);
    dX.noalias() += cmap(b.data(), rows, sl) * cmap(op.imag.data(), sl, op.length);
  });
}

#define EMGKEY_INSTANTIATE(T)                                                                 \
  template Var<T> conv1d<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Conv1dParams&); \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Conv2dParams&); \
  template Var<T> spectral_power<T>(const Var<T>&, const SpectralOperator<T>&);

EMGKEY_INSTANTIATE(float)
EMGKEY_INSTANTIATE(double)

#undef EMGKEY_INSTANTIATE

}  // namespace emgkey::nn
